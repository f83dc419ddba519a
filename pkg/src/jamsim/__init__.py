"""Link-level MIMO-OFDM jamming / anti-jamming simulator with a learned jammer."""

__version__ = "0.1.0"
