"""Central-finite-difference gradient verification.

This is the acceptance oracle for every piece of training code: any network
loss expressible as a closure over named parameters can be checked against
numeric differentiation, independent of the tape's backward rules.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from crashsynth.grad.tensor import Tape, Tensor


def gradient_check(
    f: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    step: float = 1e-5,
) -> float:
    """Max over parameter coordinates of the relative error between the taped
    gradient and a central difference of `f`.

    `f` must rebuild its graph from `params` on every call and be free of any
    randomness not frozen outside the closure. Non-finite values anywhere are
    reported as an infinite error, never raised.
    """
    with Tape() as tape:
        loss = f()
    if loss.data.size != 1 or not np.isfinite(loss.data).all():
        return float("inf")
    analytic = tape.backward(loss, params)

    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        ana = analytic[name].reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + step
            f_plus = f().item()
            flat[i] = saved - step
            f_minus = f().item()
            flat[i] = saved
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                return float("inf")
            numeric = (f_plus - f_minus) / (2.0 * step)
            err = abs(ana[i] - numeric) / (abs(numeric) + 1e-8)
            if err > worst:
                worst = err
    return worst
