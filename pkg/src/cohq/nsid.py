"""nSID-measure: the smallest induced-trace-norm distance between the dephased
channel and the dephased image of a detection-incoherent channel.

The value is bracketed by an iteration that alternates two programs:

* an outer linear program over column-stochastic matrices ``P`` that only looks
  at a finite state set ``D`` and therefore gives a lower bound, and
* an inner maximisation over all states for the ``P`` found by the outer
  program, which gives an upper bound together with a worst-case state.

The worst-case state and its orbit under diagonal phase rotations are added to
``D`` and the two steps repeat until the bounds meet.

For a fixed ``P`` write ``G_k`` for the matrix with
``tr(rho G_k) = <k|Delta(Theta - Phi_P)(rho)|k>``. Because the ``G_k`` sum to
zero, ``||Delta(Theta - Phi_P) rho||_1 = 2 max_B tr(rho G_B)`` with
``G_B = sum_{k in B} G_k``, so the inner problem is one small semidefinite
program per subset ``B`` of output indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import conic
from .classify import check_stochastic
from .conic import ConicBuilder, ConicProblem
from .qcore import Channel, apply, choi, fourier_matrix, projector, trace_norm

DIM_CAP = 8
DEDUP_TOL = 1e-10
DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 50
SOLVER_TOL = 1e-9


# state sets ----------------------------------------------------------------

def _dedup(kept: list, states, tol: float) -> list:
    for rho in states:
        rho = np.array(rho, dtype=complex)
        if kept and rho.shape != kept[0].shape:
            raise ValueError("all states in a StateSet must share one dimension")
        # the Frobenius norm lower-bounds the trace norm, so it screens cheaply
        if all(np.linalg.norm(rho - r) > 2 * tol or 0.5 * trace_norm(rho - r) > tol for r in kept):
            rho.setflags(write=False)
            kept.append(rho)
    return kept


class StateSet:
    """Ordered, deduplicated collection of density matrices of one dimension."""

    __slots__ = ("states",)

    def __init__(self, states=(), dedup_tol: float = DEDUP_TOL):
        kept = _dedup([], states, dedup_tol)
        if not kept:
            raise ValueError("a StateSet must contain at least one state")
        object.__setattr__(self, "states", tuple(kept))

    def __setattr__(self, name, value):
        raise AttributeError("StateSet is immutable")

    def extended(self, states, dedup_tol: float = DEDUP_TOL) -> "StateSet":
        """New set with ``states`` appended (duplicates of existing members dropped)."""
        out = object.__new__(StateSet)
        object.__setattr__(out, "states", tuple(_dedup(list(self.states), states, dedup_tol)))
        return out

    def __reduce__(self):
        return (StateSet, (tuple(np.array(r) for r in self.states),))

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, i):
        return self.states[i]

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def diagonals(self) -> np.ndarray:
        """Matrix whose columns are the populations of the states."""
        return np.array([np.real(np.diag(r)) for r in self.states]).T


def initial_states(d: int) -> StateSet:
    """Incoherent basis, Fourier basis and the maximally coherent state."""
    F = fourier_matrix(d)
    states = [projector(np.eye(d)[i]) for i in range(d)]
    states += [projector(F[:, k]) for k in range(d)]
    states.append(projector(np.ones(d)))
    return StateSet(states)


def phase_orbit(rho: np.ndarray) -> list[np.ndarray]:
    """``Z^k rho Z^-k`` for ``Z = diag(1, w, ..., w^(d-1))``, ``w = exp(2 pi i / d)``."""
    d = rho.shape[0]
    z = np.exp(2j * np.pi * np.arange(d) / d)
    out = []
    for k in range(d):
        ph = z ** k
        out.append(ph[:, None] * rho * ph.conj()[None, :])
    return out


def augment(D: StateSet, rho_star) -> StateSet:
    """Add the phase orbit of ``rho_star`` to ``D`` (duplicates dropped)."""
    rho_star = np.asarray(rho_star, dtype=complex)
    return D.extended(phase_orbit(rho_star))


# outer linear program --------------------------------------------------------

def outer_lp(S, R, tol: float = SOLVER_TOL) -> tuple[float, np.ndarray]:
    """Best column-stochastic ``P`` for the finite state set.

    Minimises ``2 x`` subject to ``x >= sum_k T[k, i]``, ``T >= S - P R``,
    ``T >= 0`` and ``P`` column-stochastic.

    Parameters
    ----------
    S : (d_out, N) array
        Output populations of the channel on each state.
    R : (d_in, N) array
        Input populations of each state.

    Returns
    -------
    value, P
    """
    S = np.asarray(S, dtype=float)
    R = np.asarray(R, dtype=float)
    dout, N = S.shape
    din = R.shape[0]
    if R.shape[1] != N:
        raise ValueError("S and R must have the same number of columns")
    nP, nT = dout * din, dout * N
    # variables: x (free), P, T, slack1 (dout*N), slack2 (N)
    ix = 0
    iP = 1
    iT = iP + nP
    is1 = iT + nT
    is2 = is1 + nT
    nv = is2 + N
    rows, rhs = [], []
    # T[k,i] + sum_l P[k,l] R[l,i] - s1[k,i] = S[k,i]
    for k in range(dout):
        for i in range(N):
            r = np.zeros(nv)
            r[iT + k * N + i] = 1
            r[iP + k * din:iP + (k + 1) * din] = R[:, i]
            r[is1 + k * N + i] = -1
            rows.append(r)
            rhs.append(S[k, i])
    # x - sum_k T[k,i] - s2[i] = 0
    for i in range(N):
        r = np.zeros(nv)
        r[ix] = 1
        r[iT + np.arange(dout) * N + i] = -1
        r[is2 + i] = -1
        rows.append(r)
        rhs.append(0.0)
    # sum_k P[k,l] = 1
    for l in range(din):
        r = np.zeros(nv)
        r[iP + np.arange(dout) * din + l] = 1
        rows.append(r)
        rhs.append(1.0)
    c = np.zeros(nv)
    c[ix] = 2.0
    prob = ConicProblem(c, np.array(rows), np.array(rhs),
                        [conic.Free(1), conic.Nonneg(nP + 2 * nT + N)])
    res = conic.solve(prob, tol=tol)
    conic.require(res, "outer LP")
    P = np.clip(res.x[iP:iP + nP].reshape(dout, din), 0, None)
    P /= P.sum(axis=0, keepdims=True)
    return float(res.primal_value), P


# inner maximisation -----------------------------------------------------------

def inner_blocks(chan: Channel, P) -> np.ndarray:
    """Matrices ``G_k`` with ``tr(rho G_k) = <k|Delta(chan - Phi_P) rho|k>``."""
    P = check_stochastic(P, atol=1e-8)
    if P.shape != (chan.dim_out, chan.dim_in):
        raise ValueError(f"stochastic matrix of shape {P.shape} does not fit the channel")
    J = choi(chan).reshaped()
    k = np.arange(chan.dim_out)
    G = J[k, :, k, :].conj()
    return G - np.einsum("kl,lm->klm", P, np.eye(chan.dim_in))


@lru_cache(maxsize=None)
def _density_template(d: int):
    """Constraint data and objective basis for ``rho >= 0, tr rho = 1``."""
    bld = ConicBuilder()
    rho = bld.hermitian_psd(d)
    bld.add_constraint([(rho, lambda v: np.trace(v).real)], [1.0])
    bld.minimize([(rho, lambda v: 0.0)])
    prob = bld.build()
    basis = np.array(list(rho.unit_values()))
    return prob, rho, basis


def max_expectation_sdp(G, tol: float = SOLVER_TOL) -> tuple[float, np.ndarray]:
    """``max tr(rho G)`` over density matrices, solved as a semidefinite program."""
    G = np.asarray(G, dtype=complex)
    tmpl, rho, basis = _density_template(G.shape[0])
    c = -np.einsum("jab,ba->j", basis, G).real
    prob = ConicProblem(c, tmpl.A, tmpl.b, tmpl.cones)
    res = conic.solve(prob, tol=tol)
    conic.require(res, "inner SDP")
    r = ConicBuilder.value(rho, res.x)
    r = (r + r.conj().T) / 2
    return float(-res.primal_value), r / np.trace(r).real


def _relaxation(Gs, fixed_in, free, tol):
    """Upper bound with ``0 <= rho_k <= rho`` for the undecided indices."""
    d = Gs.shape[1]
    bld = ConicBuilder()
    rho = bld.hermitian_psd(d)
    parts = [bld.hermitian_psd(d) for _ in free]
    gaps = [bld.hermitian_psd(d) for _ in free]
    bld.add_constraint([(rho, lambda v: np.trace(v).real)], [1.0])
    for part, gap in zip(parts, gaps):
        bld.add_constraint([(gap, lambda v: v), (part, lambda v: v), (rho, lambda v: -v)],
                           np.zeros((d, d)), hermitian=True)
    G_in = Gs[list(fixed_in)].sum(axis=0) if fixed_in else np.zeros((d, d))
    bld.minimize([(rho, lambda v: -np.trace(v @ G_in).real)]
                 + [(part, lambda v, k=k: -np.trace(v @ Gs[k]).real) for part, k in zip(parts, free)])
    res = conic.solve(bld.build(), tol=tol)
    conic.require(res, "relaxation SDP")
    return float(-res.primal_value)


def _best_subset(Gs, tol, strategy):
    """``max_B max_rho tr(rho G_B)`` over nonempty subsets ``B``; returns (value, rho, B)."""
    d_out, d, _ = Gs.shape
    best = (-np.inf, None, None)

    def leaf(B):
        GB = Gs[list(B)].sum(axis=0)
        return max_expectation_sdp(GB, tol)

    if strategy == "enumerate":
        for r in range(1, d_out + 1):
            for B in itertools.combinations(range(d_out), r):
                val, rho = leaf(B)
                if val > best[0]:
                    best = (val, rho, B)
        return best
    if strategy != "branch_and_bound":
        raise ValueError(f"unknown inner strategy {strategy!r}")
    # depth-first over decisions for indices 0..d_out-1
    stack = [((), ())]
    while stack:
        inc, exc = stack.pop()
        decided = len(inc) + len(exc)
        if decided == d_out:
            if inc:
                val, rho = leaf(inc)
                if val > best[0]:
                    best = (val, rho, inc)
            continue
        free = list(range(decided, d_out))
        if best[1] is not None and _relaxation(Gs, inc, free, tol) <= best[0] + tol:
            continue
        k = decided
        stack.append((inc, exc + (k,)))
        stack.append((inc + (k,), exc))
    return best


def inner_max(chan: Channel, P, tol: float = SOLVER_TOL, strategy: str = "enumerate",
              dim_cap: int = DIM_CAP) -> tuple[float, np.ndarray]:
    """``max_rho ||Delta(chan - Phi_P) rho||_1`` and a maximising state.

    ``strategy`` is ``"enumerate"`` (one semidefinite program per subset of
    output indices) or ``"branch_and_bound"`` (prunes subsets with a relaxation
    in which undecided blocks satisfy ``0 <= rho_k <= rho``).
    """
    if max(chan.dim_in, chan.dim_out) > dim_cap:
        raise ValueError(f"channel dimensions exceed the cap {dim_cap}")
    Gs = inner_blocks(chan, P)
    val, rho, _ = _best_subset(Gs, tol, strategy)
    return max(0.0, 2 * val), rho


def induced_distance(chan: Channel, P, rho) -> float:
    """``||Delta(chan - Phi_P) rho||_1`` evaluated directly."""
    P = np.asarray(P, dtype=float)
    diff = np.real(np.diag(apply(chan, rho))) - P @ np.real(np.diag(rho))
    return float(np.abs(diff).sum())


# the iteration ---------------------------------------------------------------

@dataclass
class NsidResult:
    value: float
    lower: float
    upper: float
    optimal_P: np.ndarray
    worst_state: np.ndarray
    iterations: int
    history: list = field(default_factory=list)
    converged: bool = True
    n_states: int = 0

    @property
    def status(self) -> str:
        return "converged" if self.converged else "max_iter"

    def as_dict(self) -> dict:
        return {
            "measure": "nsid",
            "value": self.value,
            "lower": self.lower,
            "upper": self.upper,
            "status": self.status,
            "iterations": self.iterations,
            "history": [list(h) for h in self.history],
            "optimal_P": self.optimal_P.tolist(),
            "n_states": self.n_states,
        }


def nsid_measure(chan: Channel, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, *,
                 strategy: str = "enumerate", dim_cap: int = DIM_CAP,
                 solver_tol: float = SOLVER_TOL) -> NsidResult:
    """nSID-measure of ``chan`` by alternating lower and upper bounds.

    Parameters
    ----------
    chan : Channel
    tol : float
        Stop once ``upper - lower <= tol``.
    max_iter : int
        Iteration limit; on hitting it the current bracket is returned with
        ``converged=False``.
    strategy : str
        Inner-problem strategy, see :func:`inner_max`.

    Returns
    -------
    NsidResult
        ``value`` is the final upper bound (the best inner value seen).
    """
    if max(chan.dim_in, chan.dim_out) > dim_cap:
        raise ValueError(f"channel dimensions ({chan.dim_out}x{chan.dim_in}) exceed the cap {dim_cap}")
    din, dout = chan.dim_in, chan.dim_out
    if dout == 1:
        P = np.ones((1, din))
        return NsidResult(0.0, 0.0, 0.0, P, np.eye(din) / din, 0, [], True, 0)

    D = initial_states(din)
    lower, upper = -np.inf, np.inf
    best_P, worst = None, None
    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        R = D.diagonals()
        S = np.array([np.real(np.diag(apply(chan, r))) for r in D]).T
        lb, P = outer_lp(S, R, tol=solver_tol)
        ub, rho = inner_max(chan, P, tol=solver_tol, strategy=strategy, dim_cap=dim_cap)
        history.append((lb, ub))
        lower = max(lower, lb)
        if ub < upper:
            upper, best_P, worst = ub, P, rho
        if upper - lower <= tol:
            converged = True
            break
        D = augment(D, rho)
    lower = max(0.0, min(lower, upper))
    return NsidResult(upper, lower, upper, best_P, worst, it, history, converged, len(D))


# channel discrimination ------------------------------------------------------

def guess_prob_channels(theta0: Channel, theta1: Channel, lam: float = 0.5, *,
                        tol: float = SOLVER_TOL, strategy: str = "enumerate") -> float:
    """Best single-shot guessing probability with incoherent measurements.

    The channel ``theta0`` is supplied with prior ``lam`` and ``theta1`` with
    ``1 - lam``; the guesser picks the probe state and measures incoherently.
    Equals ``1/2 + 1/2 max_rho ||T rho||_1`` with
    ``T = Delta[lam theta0 - (1 - lam) theta1]``.
    """
    if not 0 <= lam <= 1:
        raise ValueError("prior lam must lie in [0, 1]")
    if (theta0.dim_in, theta0.dim_out) != (theta1.dim_in, theta1.dim_out):
        raise ValueError("channels must have matching dimensions")
    k = np.arange(theta0.dim_out)
    G0 = choi(theta0).reshaped()[k, :, k, :].conj()
    G1 = choi(theta1).reshaped()[k, :, k, :].conj()
    Gs = lam * G0 - (1 - lam) * G1
    # sum_k G_k = (2 lam - 1) 1, so ||T rho||_1 = 2 max_B tr(rho G_B) - (2 lam - 1),
    # where the empty subset contributes 0
    val, _, _ = _best_subset(Gs, tol, strategy)
    best = 2 * max(0.0, val) - (2 * lam - 1)
    return 0.5 + 0.5 * best
