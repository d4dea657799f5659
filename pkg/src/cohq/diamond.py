"""Diamond-measure: the smallest diamond distance between the dephased channel
and the dephased image of a detection-incoherent channel.

Both the primal and the dual semidefinite program are assembled and solved, so
every result carries its own duality certificate. The dephased Choi matrix
``J(Delta Theta)`` is block diagonal over the output index ``b``; the pinching
onto those blocks maps feasible points of either program to feasible points
with the same objective, so the programs are written blockwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from . import conic
from .conic import ConicBuilder
from .qcore import Channel, choi

DIM_CAP = 8


def dephased_choi_blocks(chan: Channel) -> np.ndarray:
    """Blocks ``J_b[a, a'] = <b|chan(|a><a'|)|b>``, shape ``(dim_out, dim_in, dim_in)``."""
    J = choi(chan).reshaped()
    b = np.arange(chan.dim_out)
    return J[b, :, b, :]


def _check_dims(chan: Channel, cap: int):
    if max(chan.dim_in, chan.dim_out) > cap:
        raise ValueError(f"channel dimensions ({chan.dim_out}x{chan.dim_in}) exceed the cap {cap}")


def _herm(m):
    return (m + m.conj().T) / 2


@dataclass
class DiamondDual:
    value: float
    X: np.ndarray
    rho: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    status: str
    iterations: int


@dataclass
class DiamondResult:
    value: float
    primal_value: float
    dual_value: float
    witness_W: np.ndarray
    witness_Z: np.ndarray
    X: np.ndarray
    rho: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    stochastic: np.ndarray
    status: str
    iterations: int

    @property
    def gap(self) -> float:
        return abs(self.primal_value - self.dual_value)

    def as_dict(self) -> dict:
        return {
            "measure": "diamond",
            "value": self.value,
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "status": self.status,
            "iterations": self.iterations,
            "stochastic": self.stochastic.tolist(),
        }


def _primal(Jb: np.ndarray, tol: float, backend):
    dout, din, _ = Jb.shape
    eye = np.eye(din)
    bld = ConicBuilder()
    a = bld.free(1)
    p = bld.nonneg(dout * din)
    Z = [bld.hermitian_psd(din) for _ in range(dout)]
    S = [bld.hermitian_psd(din) for _ in range(dout)]
    T = bld.hermitian_psd(din)
    for b in range(dout):
        # S_b = Z_b - J_b + W_b
        bld.add_constraint(
            [(S[b], lambda v: v), (Z[b], lambda v: -v),
             (p, lambda v, b=b: -np.diag(v.reshape(dout, din)[b]))],
            -Jb[b], hermitian=True)
    # T = a 1 - 2 tr_B Z
    bld.add_constraint([(T, lambda v: v), (a, lambda v: -v[0] * eye)]
                       + [(z, lambda v: 2 * v) for z in Z], np.zeros((din, din)), hermitian=True)
    bld.add_constraint([(p, lambda v: v.reshape(dout, din).sum(axis=0))], np.ones(din))
    bld.minimize([(a, lambda v: v[0])])
    res = conic.solve(bld.build(), tol=tol, backend=backend)
    conic.require(res, "diamond primal")
    P = np.clip(bld.value(p, res.x).reshape(dout, din), 0, None)
    Zs = [_herm(bld.value(z, res.x)) for z in Z]
    return res, P, Zs


def _dual(Jb: np.ndarray, tol: float, backend):
    dout, din, _ = Jb.shape
    bld = ConicBuilder()
    rho = bld.hermitian_psd(din)
    X = [bld.hermitian_psd(din) for _ in range(dout)]
    U = [bld.hermitian_psd(din) for _ in range(dout)]
    V = [bld.hermitian_psd(din) for _ in range(dout)]
    Y1 = [bld.free_hermitian(din, offdiag=True) for _ in range(dout)]
    # the off-diagonal part of Y2 can be traded against Y1, so Y2 is taken diagonal
    Y2 = bld.free(din)
    zero = np.zeros((din, din))
    for b in range(dout):
        # X_b <= rho
        bld.add_constraint([(U[b], lambda v: v), (X[b], lambda v: v), (rho, lambda v: -v)],
                           zero, hermitian=True)
        # [1 - Delta] Y1 - X + 1_B (x) Y2 >= 0, blockwise
        bld.add_constraint([(V[b], lambda v: v), (X[b], lambda v: v), (Y1[b], lambda v: -v),
                            (Y2, lambda v: -np.diag(v))], zero, hermitian=True)
    bld.add_constraint([(rho, lambda v: np.trace(v).real)], [1.0])
    bld.minimize([(x, lambda v, b=b: -2 * np.trace(Jb[b] @ v).real) for b, x in enumerate(X)]
                 + [(Y2, lambda v: 2 * v.sum())])
    res = conic.solve(bld.build(), tol=tol, backend=backend)
    conic.require(res, "diamond dual")
    vals = {
        "X": block_diag(*[_herm(bld.value(x, res.x)) for x in X]),
        "rho": _herm(bld.value(rho, res.x)),
        "Y1": block_diag(*[bld.value(y, res.x) for y in Y1]),
        "Y2": np.diag(bld.value(Y2, res.x)).astype(complex),
    }
    return res, vals


def diamond_dual(chan: Channel, tol: float = 1e-9, *, dim_cap: int = DIM_CAP,
                 backend: str | None = None) -> DiamondDual:
    """Solve only the dual program; its value is a lower bound on the diamond-measure."""
    _check_dims(chan, dim_cap)
    res, vals = _dual(dephased_choi_blocks(chan), tol, backend)
    return DiamondDual(-res.primal_value, status=res.status, iterations=res.iterations, **vals)


def diamond_measure(chan: Channel, tol: float = 1e-9, *, dim_cap: int = DIM_CAP,
                    backend: str | None = None) -> DiamondResult:
    """Diamond-measure of ``chan`` with primal and dual witnesses.

    Parameters
    ----------
    chan : Channel
    tol : float
        Solver tolerance handed to :func:`cohq.conic.solve` for both programs.
    dim_cap : int
        Largest admissible input or output dimension.

    Returns
    -------
    DiamondResult
        ``value`` is the primal optimum; ``gap`` compares it with the separately
        solved dual program.
    """
    _check_dims(chan, dim_cap)
    Jb = dephased_choi_blocks(chan)
    pres, P, Zs = _primal(Jb, tol, backend)
    dres, vals = _dual(Jb, tol, backend)
    W = np.diag(P.ravel()).astype(complex)
    value = float(pres.primal_value)
    return DiamondResult(
        value=value,
        primal_value=value,
        dual_value=float(-dres.primal_value),
        witness_W=W,
        witness_Z=block_diag(*Zs),
        stochastic=P,
        status="optimal" if pres.optimal and dres.optimal else "inaccurate",
        iterations=pres.iterations + dres.iterations,
        **vals,
    )
