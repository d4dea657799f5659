"""Membership tests for the free classes of POVMs and channels.

A channel is detection-incoherent when its output populations depend only on
the input populations, creation-incoherent when it maps diagonal states to
diagonal states, and detection-creation-incoherent when it is both. All tests
go through the coefficient tensor of :func:`cohq.qcore.coefficients`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qcore import STRUCT_TOL, Channel, apply, coefficients, ket

DEFAULT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Povm:
    """A finite POVM ``{P_n}`` on a ``dim``-dimensional space."""

    elements: tuple

    def __init__(self, elements: Sequence, atol: float = STRUCT_TOL):
        els = tuple(np.asarray(e, dtype=complex) for e in elements)
        if not els:
            raise ValueError("a POVM needs at least one element")
        d = els[0].shape[0]
        for e in els:
            if e.shape != (d, d):
                raise ValueError("POVM elements must be square matrices of a common size")
            if np.max(np.abs(e - e.conj().T)) > atol:
                raise ValueError("POVM element is not Hermitian")
            if np.linalg.eigvalsh((e + e.conj().T) / 2)[0] < -atol:
                raise ValueError("POVM element is not positive semidefinite")
        if np.max(np.abs(sum(els) - np.eye(d))) > atol:
            raise ValueError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", els)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]


def _max_offdiag(m: np.ndarray) -> float:
    off = m - np.diag(np.diag(m))
    return float(np.max(np.abs(off), initial=0.0))


def is_free_povm(povm, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Whether every element is diagonal in the incoherent basis.

    Returns the verdict together with the largest off-diagonal magnitude.
    Accepts a :class:`Povm` or a plain sequence of elements.
    """
    if not isinstance(povm, Povm):
        povm = Povm(povm)
    worst = max(_max_offdiag(e) for e in povm.elements)
    return worst <= tol, worst


@dataclass(frozen=True)
class FreeClassReport:
    detection_incoherent: bool
    creation_incoherent: bool
    detection_creation_incoherent: bool
    max_violation_di: float
    max_violation_ci: float
    tp_residual: float = 0.0

    def as_dict(self) -> dict:
        return {
            "detection-incoherent": self.detection_incoherent,
            "creation-incoherent": self.creation_incoherent,
            "detection-creation-incoherent": self.detection_creation_incoherent,
            "max_violation_di": self.max_violation_di,
            "max_violation_ci": self.max_violation_ci,
            "tp_residual": self.tp_residual,
        }


def di_violation(chan: Channel) -> float:
    """Largest ``|coeffs[a, a, b, d]|`` over ``b != d``."""
    C = coefficients(chan)
    a = np.arange(chan.dim_out)
    pop = C[a, a]  # (dim_out, dim_in, dim_in) indexed [a, b, d]
    mask = ~np.eye(chan.dim_in, dtype=bool)
    return float(np.max(np.abs(pop[:, mask]), initial=0.0))


def ci_violation(chan: Channel) -> float:
    """Largest ``|coeffs[b, c, a, a]|`` over ``b != c``."""
    C = coefficients(chan)
    a = np.arange(chan.dim_in)
    diag_in = C[:, :, a, a]  # [b, c, a]
    mask = ~np.eye(chan.dim_out, dtype=bool)
    return float(np.max(np.abs(diag_in[mask]), initial=0.0))


def classify(chan: Channel, tol: float = DEFAULT_TOL) -> FreeClassReport:
    """Classify ``chan`` into the detection/creation-incoherent classes."""
    di = di_violation(chan)
    ci = ci_violation(chan)
    tp = chan.tp_residual()
    is_di = di <= tol
    is_ci = ci <= tol and tp <= max(tol, STRUCT_TOL)
    return FreeClassReport(is_di, is_ci, is_di and is_ci, di, ci, tp)


def classical_action(chan: Channel) -> np.ndarray:
    """Transition matrix ``P[k, l] = <k|chan(|l><l|)|k>``."""
    d = chan.dim_in
    cols = [np.real(np.diag(apply(chan, np.outer(ket(d, l), ket(d, l))))) for l in range(d)]
    return np.array(cols).T


def check_stochastic(P, atol: float = STRUCT_TOL) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.size == 0:
        raise ValueError("stochastic matrix must be a nonempty 2D array")
    if np.any(P < -atol):
        raise ValueError("stochastic matrix has negative entries")
    if np.max(np.abs(P.sum(axis=0) - 1)) > atol:
        raise ValueError("columns of a stochastic matrix must sum to 1")
    return P


def channel_from_stochastic(P) -> Channel:
    """Classical channel with Kraus operators ``sqrt(P[k, l]) |k><l|``."""
    P = np.clip(check_stochastic(P), 0, None)
    dout, din = P.shape
    ops = []
    for k in range(dout):
        for l in range(din):
            if P[k, l] > 0:
                op = np.zeros((dout, din), dtype=complex)
                op[k, l] = np.sqrt(P[k, l])
                ops.append(op)
    return Channel(ops)
