"""Lower bounds on the relative-entropy measure

    M_c(Theta) = sup_rho S(Theta Delta rho || Delta Theta rho)

for the detection-creation-incoherent setting. The objective is convex in
``rho``, so the supremum is approached on pure states; we run multi-start
projected-gradient ascent on the unit sphere. Logarithms are base 2.

Before any ascent, an exact test decides whether the supremum is infinite:
with ``G_k = sum_n K_n^dag |k><k| K_n`` the population ``<k|Theta psi|k>`` is
``psi^dag G_k psi``. The value diverges iff for some ``k`` the block of ``G_k``
on ``{a : (G_k)_aa > 0}`` is singular; a kernel vector of that block is a pure
state whose dephased input reaches ``|k>`` while the dephased output does not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import Channel, apply, dephase

EIG_FLOOR = 1e-12
LN2 = np.log(2.0)


def _eigh(a):
    return np.linalg.eigh((a + a.conj().T) / 2)


def relative_entropy(rho, sigma, floor: float = EIG_FLOOR) -> float:
    """``S(rho || sigma)`` in bits; ``inf`` when ``rho`` has weight outside the support of ``sigma``."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError("states must have equal dimensions")
    p, U = _eigh(rho)
    q, V = _eigh(sigma)
    p = np.clip(p, 0, None)
    overlap = np.abs(U.conj().T @ V) ** 2  # [i, j] = |<r_i|s_j>|^2
    weight = p @ overlap  # weight of rho on each eigenvector of sigma
    kernel = q <= floor
    if np.any(weight[kernel] > floor):
        return float("inf")
    pos = p > floor
    h = float(np.sum(p[pos] * np.log(p[pos])))
    cross = float(np.sum(weight[~kernel] * np.log(q[~kernel])))
    return max(0.0, (h - cross) / LN2)


def population_operators(chan: Channel) -> np.ndarray:
    """``G_k = sum_n K_n^dag |k><k| K_n``, stacked along the first axis."""
    K = np.array(chan.kraus)  # (n, dout, din)
    return np.einsum("nka,nkb->kab", K.conj(), K)


def divergence_witness(chan: Channel, tol: float = 1e-12) -> np.ndarray | None:
    """A pure state with infinite objective, or ``None`` if the supremum is finite."""
    for G in population_operators(chan):
        diag = np.real(np.diag(G))
        scale = max(1.0, float(diag.max(initial=0.0)))
        idx = np.flatnonzero(diag > tol * scale)
        if idx.size == 0:
            continue
        w, v = _eigh(G[np.ix_(idx, idx)])
        if w[0] <= tol * scale:
            psi = np.zeros(chan.dim_in, dtype=complex)
            psi[idx] = v[:, 0]
            return psi
    return None


@dataclass
class McEstimate:
    value: float
    argmax_state: np.ndarray
    restarts: int
    converged_restarts: int
    divergent: bool = False

    def as_dict(self) -> dict:
        return {
            "measure": "mc",
            "value": self.value,
            "restarts": self.restarts,
            "converged_restarts": self.converged_restarts,
            "divergent": self.divergent,
        }


def mc_objective(chan: Channel, rho) -> float:
    """``S(Theta Delta rho || Delta Theta rho)`` in bits."""
    rho = np.asarray(rho, dtype=complex)
    return relative_entropy(apply(chan, dephase(rho)), dephase(apply(chan, rho)))


def _adjoint(chan: Channel, X: np.ndarray) -> np.ndarray:
    return sum(k.conj().T @ X @ k for k in chan.kraus)


def _value_and_gradient(chan: Channel, psi: np.ndarray, floor: float):
    """Objective (nats) and ``M`` with ``df = tr(M d rho)`` at ``rho = psi psi^dag``."""
    rho = np.outer(psi, psi.conj())
    rho1 = apply(chan, dephase(rho))
    rho2 = np.clip(np.real(np.diag(apply(chan, rho))), floor, None)
    w, U = _eigh(rho1)
    w = np.clip(w, floor, None)
    log1 = (U * np.log(w)) @ U.conj().T
    f = float(np.real(np.trace(rho1 @ log1)) - np.real(np.diag(rho1)) @ np.log(rho2))
    E1 = log1 + np.eye(len(rho2)) - np.diag(np.log(rho2))
    E2 = -np.diag(np.real(np.diag(rho1)) / rho2)
    M = dephase(_adjoint(chan, E1)) + _adjoint(chan, E2)
    return f, (M + M.conj().T) / 2


def _ascend(chan: Channel, psi: np.ndarray, steps: int, floor: float, gtol: float):
    f, M = _value_and_gradient(chan, psi, floor)
    t = 1.0
    for _ in range(steps):
        Mpsi = M @ psi
        g = 2 * (Mpsi - (psi.conj() @ Mpsi) * psi)
        gn = np.linalg.norm(g)
        if gn < gtol:
            return psi, f, True
        t = min(4 * t, 10.0)
        while True:
            cand = psi + t * g
            cand /= np.linalg.norm(cand)
            fc, Mc = _value_and_gradient(chan, cand, floor)
            if fc >= f + 1e-4 * t * gn ** 2 or t < 1e-12:
                break
            t /= 2
        if fc <= f:
            return psi, f, True
        converged = fc - f < 1e-13 * max(1.0, abs(f))
        psi, f, M = cand, fc, Mc
        if converged:
            return psi, f, True
    return psi, f, False


def mc_lower_bound(chan: Channel, restarts: int = 64, steps: int = 200, seed: int = 0, *,
                   floor: float = EIG_FLOOR, gtol: float = 1e-9) -> McEstimate:
    """Best value of the relative-entropy objective found by multi-start ascent.

    Parameters
    ----------
    chan : Channel
    restarts : int
        Number of random pure starting states (plus the incoherent basis states).
    steps : int
        Ascent iterations per restart.
    seed : int
        Seed for the starting states; equal seeds give identical estimates.

    Returns
    -------
    McEstimate
        ``value`` is an attained objective value, hence a lower bound on
        ``M_c``. It is ``inf`` when the exact divergence test fires; the
        witness is then returned as ``argmax_state``.
    """
    witness = divergence_witness(chan)
    if witness is not None:
        return McEstimate(float("inf"), np.outer(witness, witness.conj()), 0, 0, True)
    d = chan.dim_in
    rng = np.random.default_rng(seed)
    starts = [np.eye(d, dtype=complex)[i] for i in range(min(d, restarts))]
    while len(starts) < restarts:
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        starts.append(v / np.linalg.norm(v))
    best_val, best_psi, n_conv = -np.inf, starts[0], 0
    for psi0 in starts:
        psi, _, ok = _ascend(chan, psi0, steps, floor, gtol)
        n_conv += ok
        val = mc_objective(chan, np.outer(psi, psi.conj()))
        if val > best_val:
            best_val, best_psi = val, psi
    return McEstimate(max(0.0, best_val), np.outer(best_psi, best_psi.conj()), len(starts), n_conv)
