"""Standard-form conic problems over products of PSD, nonnegative and free cones."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class PSD:
    """An ``n x n`` real symmetric PSD block, stored as ``svec`` (n(n+1)/2 entries)."""

    n: int

    @property
    def size(self) -> int:
        return self.n * (self.n + 1) // 2


@dataclass(frozen=True)
class Nonneg:
    k: int

    @property
    def size(self) -> int:
        return self.k


@dataclass(frozen=True)
class Free:
    k: int

    @property
    def size(self) -> int:
        return self.k


Cone = PSD | Nonneg | Free


@dataclass
class ConicProblem:
    """minimize ``c @ x`` subject to ``A @ x == b`` and ``x`` in the cone product.

    The dual is maximize ``b @ y`` subject to ``c - A.T @ y`` in the dual cone
    (PSD and Nonneg are self-dual; the dual of Free is ``{0}``).
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    cones: Sequence[Cone]

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.A = np.asarray(self.A, dtype=float).reshape(len(self.b), -1)
        self.cones = tuple(self.cones)
        n = sum(k.size for k in self.cones)
        if n != self.c.size or self.A.shape[1] != n:
            raise ValueError(
                f"cone sizes sum to {n} but c has {self.c.size} and A has {self.A.shape[1]} columns")

    @property
    def n_vars(self) -> int:
        return self.c.size

    def segments(self):
        """Yield ``(cone, slice)`` pairs in variable order."""
        start = 0
        for cone in self.cones:
            yield cone, slice(start, start + cone.size)
            start += cone.size


@dataclass
class SolveResult:
    status: str  # optimal | infeasible | max_iter | stalled
    primal_value: float
    dual_value: float
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    iterations: int = 0
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    backend: str = ""

    @property
    def gap(self) -> float:
        return abs(self.primal_value - self.dual_value) / (1 + abs(self.primal_value))

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def accurate_to(self, tol: float) -> bool:
        """Optimal, or stopped early at an iterate whose residuals and gap are within ``tol``."""
        if self.optimal:
            return True
        if self.status == "infeasible":
            return False
        rel = abs(self.primal_value - self.dual_value) / (1 + abs(self.primal_value) + abs(self.dual_value))
        return max(self.primal_residual, self.dual_residual, rel) <= tol


class SolverError(RuntimeError):
    """Raised when a solve does not end with an optimal status."""

    def __init__(self, message: str, result: SolveResult | None = None):
        super().__init__(message)
        self.result = result


# vectorisation helpers -------------------------------------------------------

@lru_cache(maxsize=None)
def _triu(n: int):
    iu = np.triu_indices(n)
    diag = iu[0] == iu[1]
    return iu, np.where(diag, 1.0, SQRT2), np.where(diag, 1.0, 1 / SQRT2)


def svec(m: np.ndarray) -> np.ndarray:
    """Upper triangle (row-major) with off-diagonals scaled by sqrt(2)."""
    m = np.asarray(m)
    iu, up, _ = _triu(m.shape[-1])
    return m[..., iu[0], iu[1]] * up


def smat(v: np.ndarray, n: int | None = None) -> np.ndarray:
    """Inverse of :func:`svec`; works on stacks ``(..., n(n+1)/2)``."""
    v = np.asarray(v)
    if n is None:
        n = int(round((np.sqrt(8 * v.shape[-1] + 1) - 1) / 2))
    iu, _, scale = _triu(n)
    out = np.zeros(v.shape[:-1] + (n, n), dtype=v.dtype)
    out[..., iu[0], iu[1]] = v * scale
    out[..., iu[1], iu[0]] = v * scale
    return out


def embed_complex(h) -> np.ndarray:
    """Real symmetric ``[[Re H, -Im H], [Im H, Re H]]`` of a Hermitian ``H``."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("embed_complex expects a square matrix")
    if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(h), initial=0.0)):
        raise ValueError("embed_complex expects a Hermitian matrix")
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def complex_part(m: np.ndarray) -> np.ndarray:
    """Hermitian ``n x n`` matrix represented by a real symmetric ``2n x 2n`` block.

    This is ``V^dag M V / 2`` with ``V = [1; -i 1]``, so it is PSD whenever ``M`` is,
    and it inverts :func:`embed_complex`.
    """
    n = m.shape[-1] // 2
    m11, m12 = m[..., :n, :n], m[..., :n, n:]
    m21, m22 = m[..., n:, :n], m[..., n:, n:]
    return (m11 + m22) / 2 + 1j * (m21 - m12) / 2


def hvec(h: np.ndarray) -> np.ndarray:
    """Orthonormal real coordinates (n^2 of them) of a Hermitian matrix."""
    h = np.asarray(h)
    n = h.shape[-1]
    iu = np.triu_indices(n, 1)
    di = np.arange(n)
    upper = h[..., iu[0], iu[1]]
    return np.concatenate(
        [h[..., di, di].real, SQRT2 * upper.real, SQRT2 * upper.imag], axis=-1)


def hmat(v: np.ndarray, n: int, offdiag: bool = False) -> np.ndarray:
    """Inverse of :func:`hvec`; with ``offdiag`` the diagonal coordinates are absent."""
    v = np.asarray(v, dtype=float)
    iu = np.triu_indices(n, 1)
    k = iu[0].size
    out = np.zeros((n, n), dtype=complex)
    if not offdiag:
        out[np.arange(n), np.arange(n)] = v[:n]
        v = v[n:]
    z = (v[:k] + 1j * v[k:2 * k]) / SQRT2
    out[iu] = z
    out[iu[1], iu[0]] = z.conj()
    return out


# model builder ---------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    """Handle for a block of variables inside a :class:`ConicBuilder`."""

    index: int
    kind: str  # psd | hermitian | nonneg | free | free_hermitian | offdiag_hermitian
    start: int
    size: int
    n: int = 0

    @property
    def slice(self) -> slice:
        return slice(self.start, self.start + self.size)

    def unit_values(self):
        """Yield the variable's natural value for each unit coordinate."""
        for j in range(self.size):
            e = np.zeros(self.size)
            e[j] = 1.0
            yield self.from_vector(e)

    def from_vector(self, v: np.ndarray):
        if self.kind == "psd":
            return smat(v, self.n)
        if self.kind == "hermitian":
            return complex_part(smat(v, 2 * self.n))
        if self.kind == "free_hermitian":
            return hmat(v, self.n)
        if self.kind == "offdiag_hermitian":
            return hmat(v, self.n, offdiag=True)
        return np.asarray(v, dtype=float)


@dataclass
class ConicBuilder:
    """Assemble a :class:`ConicProblem` from linear maps on named variable blocks.

    Hermitian PSD variables are carried by real PSD blocks of twice the size and
    read back through :func:`complex_part`; constraints whose value is a
    Hermitian matrix are imposed on its :func:`hvec` coordinates.
    """

    cones: list = field(default_factory=list)
    vars: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    _n: int = 0

    def _add(self, kind: str, cone: Cone, n: int = 0) -> Var:
        var = Var(len(self.vars), kind, self._n, cone.size, n)
        self.vars.append(var)
        self.cones.append(cone)
        self._n += cone.size
        return var

    def psd(self, n: int) -> Var:
        return self._add("psd", PSD(n), n)

    def hermitian_psd(self, n: int) -> Var:
        return self._add("hermitian", PSD(2 * n), n)

    def nonneg(self, k: int) -> Var:
        return self._add("nonneg", Nonneg(k))

    def free(self, k: int) -> Var:
        return self._add("free", Free(k))

    def free_hermitian(self, n: int, offdiag: bool = False) -> Var:
        """Unconstrained Hermitian ``n x n`` matrix (zero diagonal with ``offdiag``)."""
        if offdiag:
            return self._add("offdiag_hermitian", Free(n * (n - 1)), n)
        return self._add("free_hermitian", Free(n * n), n)

    @staticmethod
    def _columns(var: Var, fn: Callable, hermitian: bool) -> np.ndarray:
        cols = []
        for val in var.unit_values():
            out = np.asarray(fn(val))
            cols.append(hvec(out) if hermitian else np.real_if_close(out).astype(float).ravel())
        return np.array(cols).T

    def add_constraint(self, terms, rhs, *, hermitian: bool = False) -> None:
        """Impose ``sum_v fn_v(value(v)) == rhs`` for terms ``[(v, fn_v), ...]``."""
        rhs = np.asarray(rhs)
        rhs_vec = hvec(rhs) if hermitian else np.asarray(rhs, dtype=float).ravel()
        block = {}
        for var, fn in terms:
            cols = self._columns(var, fn, hermitian)
            if cols.shape[0] != rhs_vec.size:
                raise ValueError("constraint term does not match right-hand side size")
            block[var.index] = block.get(var.index, 0) + cols
        self.rows.append(block)
        self.rhs.append(rhs_vec)

    def minimize(self, terms) -> None:
        for var, fn in terms:
            col = self._columns(var, lambda v: np.atleast_1d(fn(v)), False)[0]
            self.objective[var.index] = self.objective.get(var.index, 0) + col

    def build(self) -> ConicProblem:
        c = np.zeros(self._n)
        for idx, col in self.objective.items():
            c[self.vars[idx].slice] += col
        m = sum(r.size for r in self.rhs)
        A = np.zeros((m, self._n))
        r0 = 0
        for block, rhs in zip(self.rows, self.rhs):
            for idx, cols in block.items():
                A[r0:r0 + rhs.size, self.vars[idx].slice] += cols
            r0 += rhs.size
        b = np.concatenate(self.rhs) if self.rhs else np.zeros(0)
        return ConicProblem(c, A, b, self.cones)

    @staticmethod
    def value(var: Var, x: np.ndarray):
        return var.from_vector(x[var.slice])
