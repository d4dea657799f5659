"""Primal-dual interior-point method for :class:`ConicProblem`.

Infeasible-start path following with Nesterov-Todd scaling and Mehrotra
predictor-corrector steps. Free variables are kept in the Newton system as an
augmented block instead of being split into two nonnegative parts.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .problem import PSD, ConicProblem, Free, Nonneg, SolveResult, smat, svec

STEP_FRACTION = 0.98
REFINE_STEPS = 2
_CHUNK = 256


class _Layout:
    def __init__(self, prob: ConicProblem):
        free, nonneg, psd = [], [], []
        for cone, sl in prob.segments():
            idx = np.arange(sl.start, sl.stop)
            if isinstance(cone, Free):
                free.append(idx)
            elif isinstance(cone, Nonneg):
                nonneg.append(idx)
            elif isinstance(cone, PSD):
                psd.append((cone.n, sl))
            else:  # pragma: no cover - guarded by ConicProblem
                raise TypeError(cone)
        self.free = np.concatenate(free) if free else np.zeros(0, int)
        self.nonneg = np.concatenate(nonneg) if nonneg else np.zeros(0, int)
        self.psd = psd
        self.degree = self.nonneg.size + sum(n for n, _ in psd)

    def unit(self, n_vars: int) -> np.ndarray:
        e = np.zeros(n_vars)
        e[self.nonneg] = 1.0
        for n, sl in self.psd:
            e[sl] = svec(np.eye(n))
        return e


class _Scaling:
    """Nesterov-Todd scaling point of the cone part of ``(x, s)``."""

    def __init__(self, lay: _Layout, x: np.ndarray, s: np.ndarray):
        self.lay = lay
        xn, sn = x[lay.nonneg], s[lay.nonneg]
        self.w = np.sqrt(xn / sn)
        self.lam_nn = np.sqrt(xn * sn)
        self.R, self.Rinv, self.lam, self.W = [], [], [], []
        for n, sl in lay.psd:
            X, S = smat(x[sl], n), smat(s[sl], n)
            Lx = np.linalg.cholesky(X)
            Ls = np.linalg.cholesky(S)
            U, sig, Vt = np.linalg.svd(Ls.T @ Lx)
            R = Lx @ Vt.T / np.sqrt(sig)
            self.R.append(R)
            self.Rinv.append(np.sqrt(sig)[:, None] * (Vt @ np.linalg.inv(Lx)))
            self.lam.append(sig)
            self.W.append(R @ R.T)

    def apply_H(self, v: np.ndarray) -> np.ndarray:
        """``H v = W^2 v`` on the cone coordinates; zero on free coordinates."""
        out = np.zeros_like(v)
        lay = self.lay
        out[lay.nonneg] = self.w ** 2 * v[lay.nonneg]
        for (n, sl), W in zip(lay.psd, self.W):
            out[sl] = svec(W @ smat(v[sl], n) @ W)
        return out

    def schur(self, A: np.ndarray) -> np.ndarray:
        """``A_c H A_c^T`` for the cone columns of ``A``."""
        lay = self.lay
        An = A[:, lay.nonneg]
        M = (An * self.w ** 2) @ An.T
        for (n, sl), W in zip(lay.psd, self.W):
            Ab = A[:, sl]
            rows = np.flatnonzero(np.any(Ab != 0, axis=1))
            if rows.size == 0:
                continue
            HA = np.empty((rows.size, Ab.shape[1]))
            for k in range(0, rows.size, _CHUNK):
                r = rows[k:k + _CHUNK]
                mats = smat(Ab[r], n)
                HA[k:k + _CHUNK] = svec(W @ mats @ W)
            M[np.ix_(rows, rows)] += Ab[rows] @ HA.T
        return M

    def scaled_columns(self, A: np.ndarray) -> np.ndarray:
        """``A_c Q`` with ``H = Q Q^T``; columns ordered nonneg first, then PSD blocks."""
        lay = self.lay
        parts = [A[:, lay.nonneg] * self.w]
        for (n, sl), R in zip(lay.psd, self.R):
            parts.append(svec(R.T @ smat(A[:, sl], n) @ R))
        return np.concatenate(parts, axis=1)

    def q_inverse(self, v: np.ndarray) -> np.ndarray:
        """``Q^{-1} v`` in the column order of :meth:`scaled_columns`."""
        lay = self.lay
        parts = [v[lay.nonneg] / self.w]
        for (n, sl), Rinv in zip(lay.psd, self.Rinv):
            parts.append(svec(Rinv @ smat(v[sl], n) @ Rinv.T))
        return np.concatenate(parts)

    def q_transpose(self, v: np.ndarray) -> np.ndarray:
        lay = self.lay
        parts = [v[lay.nonneg] * self.w]
        for (n, sl), R in zip(lay.psd, self.R):
            parts.append(svec(R.T @ smat(v[sl], n) @ R))
        return np.concatenate(parts)

    def q_apply(self, u: np.ndarray, nv: int) -> np.ndarray:
        """``Q u`` scattered back to variable coordinates (zero on free ones)."""
        lay = self.lay
        out = np.zeros(nv)
        k = lay.nonneg.size
        out[lay.nonneg] = self.w * u[:k]
        for (n, sl), R in zip(lay.psd, self.R):
            size = sl.stop - sl.start
            out[sl] = svec(R @ smat(u[k:k + size], n) @ R.T)
            k += size
        return out

    def scaled(self, dx: np.ndarray, ds: np.ndarray):
        lay = self.lay
        nn = (dx[lay.nonneg] / self.w, ds[lay.nonneg] * self.w)
        blocks = []
        for (n, sl), R, Rinv in zip(lay.psd, self.R, self.Rinv):
            blocks.append((Rinv @ smat(dx[sl], n) @ Rinv.T, R.T @ smat(ds[sl], n) @ R))
        return nn, blocks


def _max_step_nonneg(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _max_step_scaled(lam, dmat):
    """Largest ``a`` with ``diag(lam) + a dmat`` PSD."""
    isq = 1 / np.sqrt(lam)
    ev = np.linalg.eigvalsh((dmat * isq[:, None]) * isq[None, :])[0]
    return np.inf if ev >= 0 else float(-1 / ev)


def solve_ipm(prob: ConicProblem, tol: float = 1e-8, max_iter: int = 200,
              verbose: bool = False) -> SolveResult:
    A, b, c = prob.A, prob.b, prob.c
    m, nv = A.shape
    lay = _Layout(prob)
    if lay.degree == 0:
        raise ValueError("problem has no conic variables")
    free, nonneg = lay.free, lay.nonneg
    Af = A[:, free]
    nf = free.size
    cone_mask = np.ones(nv, bool)
    cone_mask[free] = False

    # starting point scaled to the data
    e = lay.unit(nv)
    anorm = np.linalg.norm(A, axis=1) if m else np.zeros(0)
    xi = max(10.0, np.sqrt(lay.degree), *(np.abs(b) + 1) / (anorm + 1)) if m else 10.0
    eta = max(10.0, np.sqrt(lay.degree), np.max(np.abs(c), initial=0.0))
    x = xi * e
    s = eta * e
    y = np.zeros(m)

    bnorm, cnorm = 1 + np.linalg.norm(b), 1 + np.linalg.norm(c)
    status = "max_iter"
    it = 0
    stall = 0
    best = (np.inf, x, y, s)  # most accurate iterate, returned if we stop early
    for it in range(1, max_iter + 1):
        rp = b - A @ x
        rd = c - A.T @ y - s
        pobj, dobj = c @ x, b @ y
        mu = (x[cone_mask] @ s[cone_mask]) / lay.degree
        pres = np.linalg.norm(rp) / bnorm
        dres = np.linalg.norm(rd) / cnorm
        relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        if verbose:
            print(f"{it:3d} pobj={pobj: .9e} dobj={dobj: .9e} pres={pres:.1e} "
                  f"dres={dres:.1e} gap={relgap:.1e} mu={mu:.1e}")
        if pres <= tol and dres <= tol and relgap <= tol:
            status = "optimal"
            break
        err = max(pres, dres, relgap)
        if err < best[0]:
            best = (err, x.copy(), y.copy(), s.copy())
        if mu <= 1e-18 * (1 + abs(pobj)):
            status = "stalled"
            break
        # Farkas-type certificates from diverging iterates
        if dobj > 0 and np.linalg.norm(A.T @ y + s) <= tol * dobj and dres <= 1e-3 * dobj:
            status = "infeasible"
            break
        if pobj < 0 and np.linalg.norm(A @ x) <= tol * -pobj:
            status = "infeasible"
            break

        try:
            scal = _Scaling(lay, x, s)
        except np.linalg.LinAlgError:
            status = "stalled"
            break
        M = scal.schur(A)
        # tiny diagonal regularisation, relative per row; refinement removes its effect
        K = np.zeros((m + nf, m + nf))
        K[:m, :m] = M + np.diag(1e-13 * np.abs(np.diag(M)) + 1e-15)
        K[:m, m:] = Af
        K[m:, :m] = Af.T
        K[m:, m:] = -1e-15 * np.eye(nf)
        try:
            fac = sla.lu_factor(K, check_finite=False)
        except (ValueError, np.linalg.LinAlgError):
            status = "stalled"
            break

        def newton_raw(rp_, rd_, rc):
            # dx_c = rc - H (rd_c - A_c^T dy); A dx = rp; A_f^T dy = rd_f
            rd_c = np.where(cone_mask, rd_, 0.0)
            r1 = rp_ - A @ np.where(cone_mask, rc - scal.apply_H(rd_c), 0.0)
            sol = sla.lu_solve(fac, np.concatenate([r1, rd_[free]]), check_finite=False)
            dy, dxf = sol[:m], sol[m:]
            ds = np.where(cone_mask, rd_ - A.T @ dy, 0.0)
            dx = np.where(cone_mask, rc - scal.apply_H(ds), 0.0)
            dx[free] = dxf
            return dx, dy, ds

        aug = {}

        def newton_aug(rc):
            # scaled augmented system in u = Q^{-1} dx_c:
            #   -u + At^T dy = -g,  At u + A_f dx_f = rp,  A_f^T dy = rd_f
            if "fac" not in aug:
                At = scal.scaled_columns(A)
                nc = At.shape[1]
                K2 = np.zeros((nc + m + nf, nc + m + nf))
                K2[:nc, :nc] = -np.eye(nc)
                K2[:nc, nc:nc + m] = At.T
                K2[nc:nc + m, :nc] = At
                K2[nc:nc + m, nc + m:] = Af
                K2[nc + m:, nc:nc + m] = Af.T
                aug["nc"] = nc
                aug["fac"] = sla.lu_factor(K2, check_finite=False)
            nc = aug["nc"]
            g = scal.q_inverse(rc) - scal.q_transpose(rd)
            sol = sla.lu_solve(aug["fac"], np.concatenate([-g, rp, rd[free]]), check_finite=False)
            u, dy, dxf = sol[:nc], sol[nc:nc + m], sol[nc + m:]
            dx = scal.q_apply(u, nv)
            dx[free] = dxf
            ds = np.where(cone_mask, rd - A.T @ dy, 0.0)
            return dx, dy, ds

        def newton(rc):
            if "fac" in aug:
                return newton_aug(rc)
            dx, dy, ds = newton_raw(rp, rd, rc)
            # iterative refinement against the unreduced equations
            for _ in range(REFINE_STEPS):
                ep = rp - A @ dx
                ed = np.where(cone_mask, 0.0, rd - A.T @ dy)
                if np.linalg.norm(ep) <= 1e-3 * tol * bnorm and np.linalg.norm(ed) <= 1e-3 * tol * cnorm:
                    break
                cx, cy, cs = newton_raw(ep, ed, np.zeros(nv))
                dx, dy, ds = dx + cx, dy + cy, ds + cs
            ep = np.linalg.norm(rp - A @ dx) / bnorm
            ed = np.linalg.norm(np.where(cone_mask, 0.0, rd - A.T @ dy)) / cnorm
            if max(ep, ed) > 1e-2 * tol * max(1.0, pres / tol):
                # normal equations too ill-conditioned; use the augmented system
                return newton_aug(rc)
            return dx, dy, ds

        def steps(dx, ds):
            (dxn, dsn), blocks = scal.scaled(dx, ds)
            ap = _max_step_nonneg(x[nonneg], dx[nonneg])
            ad = _max_step_nonneg(s[nonneg], ds[nonneg])
            for lam, (dX, dS) in zip(scal.lam, blocks):
                ap = min(ap, _max_step_scaled(lam, dX))
                ad = min(ad, _max_step_scaled(lam, dS))
            return ap, ad, (dxn, dsn), blocks

        # predictor
        dx_a, dy_a, ds_a = newton(np.where(cone_mask, -x, 0.0))
        ap, ad, (dxn, dsn), blocks = steps(dx_a, ds_a)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = ((x + ap * dx_a)[cone_mask] @ (s + ad * ds_a)[cone_mask]) / lay.degree
        sigma = min(1.0, (mu_aff / mu) ** 3)

        # corrector: rc = W lam^{-1} o (sigma mu e - lam o lam - dx~ o ds~)
        rc = np.zeros(nv)
        lam = scal.lam_nn
        v = sigma * mu - lam * lam - dxn * dsn
        rc[nonneg] = scal.w * (v / lam)
        for (n, sl), R, lamb, (dX, dS) in zip(lay.psd, scal.R, scal.lam, blocks):
            V = sigma * mu * np.eye(n) - np.diag(lamb ** 2) - (dX @ dS + dS @ dX) / 2
            U = 2 * V / (lamb[:, None] + lamb[None, :])
            rc[sl] = svec(R @ U @ R.T)
        dx, dy, ds = newton(rc)
        ap, ad, _, _ = steps(dx, ds)
        ap = min(1.0, STEP_FRACTION * ap)
        ad = min(1.0, STEP_FRACTION * ad)
        if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dy))):
            status = "stalled"
            break
        x = x + ap * dx
        y = y + ad * dy
        s = s + ad * ds
        stall = stall + 1 if max(ap, ad) < 1e-8 else 0
        if stall >= 5:
            status = "stalled"
            break

    if status != "optimal" and status != "infeasible" and np.isfinite(best[0]):
        _, x, y, s = best
    rp = b - A @ x
    rd = c - A.T @ y - s
    return SolveResult(
        status=status,
        primal_value=float(c @ x),
        dual_value=float(b @ y),
        x=x, y=y, s=s,
        iterations=it,
        primal_residual=float(np.linalg.norm(rp) / (1 + np.linalg.norm(b))),
        dual_residual=float(np.linalg.norm(rd) / (1 + np.linalg.norm(c))),
        backend="ipm",
    )
