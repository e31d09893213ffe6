"""Which code wins where: a contour sweep on the shipped sample data.

Run:  python demos/04_sweep.py
"""
from totalpower import channel as ch
from totalpower import optimizer as op
from totalpower.cli import load_config, sample_config_path


def main():
    cfg = load_config(sample_config_path())
    records = op.contour_sweep(
        cfg.distances, cfg.pes, cfg.strategies(), cfg.model(), cfg.channel, cfg.r_data, cfg.include_uncoded
    )
    print(f"{len(cfg.strategies())} coded strategies plus uncoded, wire mode {cfg.wire_mode.value}")
    for r in cfg.distances:
        print(f"\nr = {r} m  (Shannon limit {ch.to_dbm(ch.shannon_limit(cfg.channel.with_distance(r), cfg.r_data)):.2f} dBm)")
        for rec in records:
            if rec.r_m == r:
                print(
                    f"  pe {rec.pe:.0e}: {rec.strategy_label:<18} P_T {rec.p_t_dbm:7.2f} dBm  "
                    f"total {rec.p_total_dbm:7.2f} dBm"
                )


if __name__ == "__main__":
    main()
