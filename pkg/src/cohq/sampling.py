"""Random states, channels and free channels for tests and experiments.

Every generator takes a ``numpy.random.Generator`` so corpora are reproducible.
"""

from __future__ import annotations

import numpy as np

from .classify import channel_from_stochastic, di_violation
from .qcore import Channel, compose, mix, unitary_channel


def _ginibre(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-random unitary via QR with the phase fix."""
    q, r = np.linalg.qr(_ginibre(rng, (d, d)))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_pure_state(rng: np.random.Generator, d: int) -> np.ndarray:
    v = _ginibre(rng, d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_density_matrix(rng: np.random.Generator, d: int, rank: int | None = None) -> np.ndarray:
    """Induced-measure random state (Ginibre of shape ``d x rank``)."""
    g = _ginibre(rng, (d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_stochastic(rng: np.random.Generator, dout: int, din: int, alpha: float = 1.0) -> np.ndarray:
    """Column-stochastic matrix with Dirichlet(alpha) columns."""
    return rng.dirichlet(np.full(dout, alpha), size=din).T


def random_channel(rng: np.random.Generator, din: int, dout: int | None = None,
                   n_kraus: int | None = None) -> Channel:
    """Random channel from a Haar isometry ``din -> dout * n_kraus``.

    ``n_kraus`` is raised to ``ceil(din / dout)`` if needed for the isometry to exist.
    """
    dout = dout or din
    r = max(n_kraus or din * dout, -(-din // dout))
    g = _ginibre(rng, (dout * r, din))
    q, _ = np.linalg.qr(g)
    return Channel(list(q.reshape(r, dout, din)))


def random_diagonal_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * rng.random(d)))


def random_monomial_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    return random_diagonal_unitary(rng, d)[:, rng.permutation(d)]


def random_measure_prepare(rng: np.random.Generator, din: int, dout: int) -> Channel:
    """``rho -> sum_l <l|rho|l> sigma_l`` with random (coherent) states ``sigma_l``."""
    ops = []
    for l in range(din):
        sigma = random_density_matrix(rng, dout, rank=int(rng.integers(1, dout + 1)))
        w, v = np.linalg.eigh(sigma)
        for lam, vec in zip(w, v.T):
            if lam > 1e-14:
                op = np.zeros((dout, din), dtype=complex)
                op[:, l] = np.sqrt(lam) * vec
                ops.append(op)
    return Channel(ops)


def random_di_channel(rng: np.random.Generator, din: int, dout: int | None = None,
                      kind: str | None = None) -> Channel:
    """Random detection-incoherent channel.

    ``kind`` picks the family: ``"stochastic"`` (classical channel between random
    diagonal unitaries), ``"prepare"`` (measure and prepare coherent states),
    ``"monomial"`` (phase-permutation unitary, square only) or ``"mixture"``
    (convex mixture of the others). ``None`` picks one at random.
    """
    dout = dout or din
    kinds = ["stochastic", "prepare", "mixture"] + (["monomial"] if din == dout else [])
    kind = kind or kinds[rng.integers(len(kinds))]
    if kind == "stochastic":
        c = channel_from_stochastic(random_stochastic(rng, dout, din))
        pre = unitary_channel(random_diagonal_unitary(rng, din))
        post = unitary_channel(random_diagonal_unitary(rng, dout))
        return compose(post, compose(c, pre))
    if kind == "prepare":
        return random_measure_prepare(rng, din, dout)
    if kind == "monomial":
        if din != dout:
            raise ValueError("monomial channels need equal dimensions")
        return unitary_channel(random_monomial_unitary(rng, din))
    if kind == "mixture":
        parts = [random_di_channel(rng, din, dout, k) for k in kinds if k != "mixture"]
        return mix(parts, rng.dirichlet(np.ones(len(parts))))
    raise ValueError(f"unknown detection-incoherent family {kind!r}")


def random_non_free_channel(rng: np.random.Generator, din: int, dout: int | None = None,
                            min_violation: float = 1e-3) -> Channel:
    """Random channel whose detection-incoherence violation is at least ``min_violation``."""
    while True:
        c = random_channel(rng, din, dout, n_kraus=int(rng.integers(1, din * (dout or din) + 1)))
        if di_violation(c) >= min_violation:
            return c
