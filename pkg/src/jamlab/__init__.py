"""Self-aware OFDM link security toolkit.

Simulates a narrowband command link on an OFDM resource grid, learns a
probabilistic vocabulary of its normal behaviour, and builds on that model to
detect, characterize, suppress, and classify jamming, convert between
modulation schemes by transport planning, and learn anti-jamming channel
allocation by active inference.
"""

__version__ = "0.1.0"
