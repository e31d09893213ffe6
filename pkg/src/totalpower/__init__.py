"""Total transmit-plus-decoding power analysis for regular LDPC codes."""

__version__ = "0.1.0"

from . import channel, codes, de_engine, graphlab, optimizer, power_models  # noqa: E402,F401
