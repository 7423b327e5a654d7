"""Rebalancing of rare crash events with an adversarial generator plus a
dual-head sequence predictor, with the full identification and evaluation
pipeline behind a single CLI."""

__version__ = "0.1.0"
