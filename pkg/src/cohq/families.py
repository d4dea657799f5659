"""The two one-parameter qutrit families used for the measure sweeps."""

from __future__ import annotations

import numpy as np

from .qcore import Channel, dephasing, fourier_unitary, mix

LAMBDA_KRAUS = tuple(np.array(k, dtype=complex) / 2 for k in (
    [[-1, 1, 0], [0, 0, 0], [1, 1, 0]],
    [[1, 0, -1], [1, 0, 1], [0, 0, 0]],
    [[0, -1, 1], [0, 0, 0], [0, 1, 1]],
))


def _check_p(p: float) -> float:
    p = float(p)
    if not 0 <= p <= 1:
        raise ValueError(f"mixing parameter must lie in [0, 1], got {p}")
    return p


def lambda_channel() -> Channel:
    return Channel(LAMBDA_KRAUS)


def theta_mix(p: float) -> Channel:
    """``(1 - p) dephasing + p Fourier unitary`` on a qutrit."""
    p = _check_p(p)
    return mix([dephasing(3), fourier_unitary(3)], [1 - p, p])


def lambda_mix(p: float) -> Channel:
    """``(1 - p) dephasing + p Lambda`` on a qutrit."""
    p = _check_p(p)
    return mix([dephasing(3), lambda_channel()], [1 - p, p])


FAMILIES = {"theta": theta_mix, "lambda": lambda_mix}
