"""Minimal reverse-mode differentiation engine over dense float64 arrays."""

from crashsynth.grad import ops
from crashsynth.grad.check import gradient_check
from crashsynth.grad.checkpoint import load_checkpoint, save_checkpoint
from crashsynth.grad.optim import AdamState, adam_step
from crashsynth.grad.tensor import Tape, Tensor

__all__ = [
    "AdamState",
    "Tape",
    "Tensor",
    "adam_step",
    "gradient_check",
    "load_checkpoint",
    "ops",
    "save_checkpoint",
]
