"""Backend-neutral conic optimisation (semidefinite and linear cones)."""

from __future__ import annotations

import os

from .problem import (PSD, ConicBuilder, ConicProblem, Free, Nonneg, SolveResult,
                      SolverError, Var, complex_part, embed_complex, hmat, hvec, smat,
                      svec)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200
# early stops whose best iterate is this accurate are still usable
ACCEPT_TOL = 1e-7
BACKENDS = ("ipm",)

__all__ = [
    "PSD", "Nonneg", "Free", "ConicProblem", "ConicBuilder", "SolveResult", "SolverError",
    "Var", "solve", "embed_complex", "complex_part", "hvec", "hmat", "svec", "smat",
    "default_backend", "BACKENDS", "require", "ACCEPT_TOL",
]


def default_backend() -> str:
    return os.environ.get("COHQ_SOLVER", "ipm")


def solve(problem: ConicProblem, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
          backend: str | None = None) -> SolveResult:
    """Solve ``problem``; the backend defaults to the ``COHQ_SOLVER`` env var, else ``ipm``."""
    backend = backend or default_backend()
    if backend == "ipm":
        from .ipm import solve_ipm
        return solve_ipm(problem, tol=tol, max_iter=max_iter)
    raise ValueError(f"unknown conic backend {backend!r}; choose from {BACKENDS}")


def require(result: SolveResult, what: str, accept_tol: float = ACCEPT_TOL) -> SolveResult:
    """Return ``result`` if it is usable, else raise :class:`SolverError`."""
    if not result.accurate_to(accept_tol):
        raise SolverError(f"{what} ended with status {result.status!r}", result)
    return result
