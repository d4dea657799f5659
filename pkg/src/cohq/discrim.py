"""Two-state discrimination restricted to incoherent (diagonal) measurements."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .qcore import check_density_matrix

ORACLE_DIM_CAP = 4


@dataclass(frozen=True, eq=False)
class DiscriminationInstance:
    """``rho0`` is prepared with probability ``lam``, ``rho1`` otherwise."""

    lam: float
    rho0: np.ndarray
    rho1: np.ndarray

    def __post_init__(self):
        if not 0 <= self.lam <= 1:
            raise ValueError("prior lam must lie in [0, 1]")
        r0 = check_density_matrix(self.rho0)
        r1 = check_density_matrix(self.rho1)
        if r0.shape != r1.shape:
            raise ValueError("states must have equal dimensions")
        object.__setattr__(self, "rho0", r0)
        object.__setattr__(self, "rho1", r1)

    @property
    def dim(self) -> int:
        return self.rho0.shape[0]

    def weighted_difference(self) -> np.ndarray:
        return self.lam * self.rho0 - (1 - self.lam) * self.rho1


def optimal_incoherent_povm(inst: DiscriminationInstance) -> np.ndarray:
    """Diagonal of the optimal element ``P0``: 1 where ``X_ii > 0``, else 0 (ties go to 0)."""
    x = np.real(np.diag(inst.weighted_difference()))
    return (x > 0).astype(float)


def guess_prob_states(inst: DiscriminationInstance) -> float:
    """Closed form ``(1 - lam) + sum_{X_ii > 0} X_ii`` with ``X = lam rho0 - (1 - lam) rho1``."""
    x = np.real(np.diag(inst.weighted_difference()))
    return float((1 - inst.lam) + x[x > 0].sum())


def success_probability(inst: DiscriminationInstance, p0_diag) -> float:
    """Success probability of the diagonal POVM ``{diag(p0), 1 - diag(p0)}``."""
    p0 = np.asarray(p0_diag, dtype=float)
    a = np.real(np.diag(inst.rho0))
    b = np.real(np.diag(inst.rho1))
    return float(inst.lam * p0 @ a + (1 - inst.lam) * (1 - p0 @ b))


def brute_force_guess_prob(inst: DiscriminationInstance, grid: int = 11) -> float:
    """Maximise over diagonal ``P0`` with entries on ``linspace(0, 1, grid)``."""
    if inst.dim > ORACLE_DIM_CAP:
        raise ValueError(f"brute force oracle is limited to dimension {ORACLE_DIM_CAP}")
    if grid < 2:
        raise ValueError("grid needs at least the two endpoints")
    pts = np.linspace(0.0, 1.0, grid)
    cand = np.array(list(itertools.product(pts, repeat=inst.dim)))
    a = np.real(np.diag(inst.rho0))
    b = np.real(np.diag(inst.rho1))
    vals = inst.lam * cand @ a + (1 - inst.lam) * (1 - cand @ b)
    return float(vals.max())
