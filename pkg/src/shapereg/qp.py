"""Strictly convex ridge QP under linear inequality rows and a parameter box.

Solves  min_w ||Phi w - y||^2 + lam ||w||^2  subject to  A w <= b  and
lo <= w <= hi, via a dual active-set method: start at the unconstrained
minimizer, repeatedly add the most violated constraint, and take the dual
steps needed to keep all multipliers non-negative.  Strict convexity
(lam > 0) makes the method finite and the minimizer unique.  Infeasibility
surfaces as an unbounded dual ray and is reported with the rows involved
instead of diverging.

Callers that solve many instances sharing the same data term (the adaptive
discretization loop does) can reuse a RidgeKernel so the Hessian is factored
once, and can warm-start from a previous active set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConvergenceFailure

DEFAULT_FEAS_TOL = 1e-9


@dataclass
class QpInstance:
    """One discretized subproblem: data term, inequality rows, parameter box."""

    phi: np.ndarray  # (n, m) design matrix
    y: np.ndarray  # (n,) targets
    lam: float  # ridge weight, must be positive
    rows_a: np.ndarray  # (k, m) inequality normals
    rows_b: np.ndarray  # (k,) right-hand sides
    lo: np.ndarray  # (m,) box lower bounds
    hi: np.ndarray  # (m,) box upper bounds

    def __post_init__(self):
        self.phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        m = self.phi.shape[1]
        self.rows_a = np.asarray(self.rows_a, dtype=float).reshape(-1, m)
        self.rows_b = np.asarray(self.rows_b, dtype=float).reshape(-1)
        self.lo = np.asarray(self.lo, dtype=float).reshape(-1)
        self.hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if self.phi.shape[0] != self.y.shape[0]:
            raise ValueError("phi and y row counts differ")
        if self.rows_a.shape[0] != self.rows_b.shape[0]:
            raise ValueError("row normals and right-hand sides differ in count")
        if self.lo.shape[0] != m or self.hi.shape[0] != m:
            raise ValueError("box bounds must match the weight dimension")
        if not self.lam > 0:
            raise ValueError("lam must be positive (strict convexity)")
        if not (np.isfinite(self.lo).all() and np.isfinite(self.hi).all()):
            raise ValueError("box bounds must be finite")
        if np.any(self.lo > self.hi):
            raise ValueError("box intervals must be non-empty")

    @property
    def m(self) -> int:
        return self.phi.shape[1]

    def objective(self, w: np.ndarray) -> float:
        r = self.phi @ w - self.y
        return float(r @ r + self.lam * (w @ w))


def make_instance(phi, y, lam, rows=(), box=None) -> QpInstance:
    """Convenience constructor: ``rows`` is a list of (a, b); box a (lo, hi) pair."""
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    m = phi.shape[1]
    if rows:
        rows_a = np.vstack([np.asarray(a, dtype=float).reshape(1, m) for a, _ in rows])
        rows_b = np.asarray([float(b) for _, b in rows])
    else:
        rows_a = np.zeros((0, m))
        rows_b = np.zeros(0)
    if box is None:
        lo, hi = np.full(m, -1e5), np.full(m, 1e5)
    else:
        lo = np.asarray(box[0], dtype=float) * np.ones(m)
        hi = np.asarray(box[1], dtype=float) * np.ones(m)
    return QpInstance(phi=phi, y=y, lam=lam, rows_a=rows_a, rows_b=rows_b, lo=lo, hi=hi)


class RidgeKernel:
    """Factored data term shared across instances with identical (phi, y, lam)."""

    def __init__(self, phi: np.ndarray, y: np.ndarray, lam: float):
        self.phi = np.atleast_2d(np.asarray(phi, dtype=float))
        self.y = np.asarray(y, dtype=float).reshape(-1)
        self.lam = float(lam)
        m = self.phi.shape[1]
        self.hess = 2.0 * (self.phi.T @ self.phi + self.lam * np.eye(m))
        self.lin = -2.0 * (self.phi.T @ self.y)
        self._cho = cho_factor(self.hess)
        self.scale = 1.0 + float(np.max(np.abs(self.phi.T @ self.y), initial=0.0))
        self.w_free = self.hinv(-self.lin)

    def hinv(self, v: np.ndarray) -> np.ndarray:
        return cho_solve(self._cho, v)


@dataclass
class QpSolution:
    w: np.ndarray
    objective: float
    kkt_residual: float
    status: str  # "optimal" | "infeasible"
    active: tuple[int, ...] = ()  # indices into the stacked rows (user rows first)
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    n_user_rows: int = 0
    certificate: str = ""

    @property
    def active_user_rows(self) -> tuple[int, ...]:
        return tuple(i for i in self.active if i < self.n_user_rows)


def solve_ridge(phi, y, lam: float) -> np.ndarray:
    """Unconstrained ridge weights: (Phi^T Phi + lam I) w = Phi^T y."""
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if phi.shape[0] != y.shape[0]:
        raise ValueError("phi and y row counts differ")
    if not lam > 0:
        raise ValueError("lam must be positive")
    m = phi.shape[1]
    gram = phi.T @ phi + lam * np.eye(m)
    rhs = phi.T @ y
    cho = cho_factor(gram)
    w = cho_solve(cho, rhs)
    # one step of iterative refinement keeps the relative residual ~machine eps
    w += cho_solve(cho, rhs - gram @ w)
    return w


def _stack_box_rows(inst: QpInstance) -> tuple[np.ndarray, np.ndarray]:
    m = inst.m
    eye = np.eye(m)
    a = np.vstack([inst.rows_a, eye, -eye])
    b = np.concatenate([inst.rows_b, inst.hi, -inst.lo])
    return a, b


def _equality_solve(kernel: RidgeKernel, a_all, b_all, active_idx: list[int]):
    """Optimum with the given rows held at equality, via the augmented KKT system.

    The augmented form stays well-conditioned when active rows pin the
    nearly-flat directions of H (tiny ridge weights), where a Schur-
    complement route through H^{-1} loses most of its digits.  One step of
    iterative refinement brings the residual to machine level.
    Returns (w, mu) or None when the system is singular.
    """
    m = kernel.hess.shape[0]
    q = len(active_idx)
    if q == 0:
        return kernel.w_free.copy(), np.zeros(0)
    nmat = a_all[active_idx].T  # (m, q)
    kkt = np.zeros((m + q, m + q))
    kkt[:m, :m] = kernel.hess
    kkt[:m, m:] = nmat
    kkt[m:, :m] = nmat.T
    rhs = np.concatenate([-kernel.lin, b_all[active_idx]])
    try:
        sol = np.linalg.solve(kkt, rhs)
        sol += np.linalg.solve(kkt, rhs - kkt @ sol)
    except np.linalg.LinAlgError:
        return None
    return sol[:m], sol[m:]


class _ActiveSet:
    """Active rows with incrementally maintained H^{-1}-metric Gram matrix."""

    def __init__(self, kernel: RidgeKernel, a_all: np.ndarray):
        self.kernel = kernel
        self.a_all = a_all
        self.idx: list[int] = []
        self.ninv = np.zeros((a_all.shape[1], 0))  # H^{-1} N
        self.gram = np.zeros((0, 0))  # N^T H^{-1} N

    def add(self, row: int, hinv_n: np.ndarray) -> None:
        n = self.a_all[row]
        cross = self.ninv.T @ n
        corner = float(n @ hinv_n)
        q = len(self.idx)
        gram = np.empty((q + 1, q + 1))
        gram[:q, :q] = self.gram
        gram[:q, q] = cross
        gram[q, :q] = cross
        gram[q, q] = corner
        self.gram = gram
        self.ninv = np.hstack([self.ninv, hinv_n[:, None]])
        self.idx.append(row)

    def drop(self, pos: int) -> None:
        keep = [i for i in range(len(self.idx)) if i != pos]
        self.gram = self.gram[np.ix_(keep, keep)]
        self.ninv = self.ninv[:, keep]
        del self.idx[pos]

    def directions(self, n_p: np.ndarray, hinv_np: np.ndarray):
        """Primal/dual step directions for working constraint normal n_p."""
        if not self.idx:
            return hinv_np, np.zeros(0)
        rhs = self.ninv.T @ n_p
        try:
            r = np.linalg.solve(self.gram, rhs)
        except np.linalg.LinAlgError:
            r = np.linalg.lstsq(self.gram, rhs, rcond=None)[0]
        z = hinv_np - self.ninv @ r
        return z, r


def solve_qp(
    inst: QpInstance,
    tol: float | None = None,
    feas_tol: float = DEFAULT_FEAS_TOL,
    max_iter: int = 20000,
    kernel: RidgeKernel | None = None,
    warm_active: tuple[int, ...] = (),
) -> QpSolution:
    """Minimize the ridge objective subject to the instance rows and box.

    Returns the unique minimizer when the system is feasible (KKT residual at
    most ``tol``, row violations at most ``feas_tol``); returns a solution
    with status ``infeasible`` naming the incompatible rows otherwise.
    ``warm_active`` seeds the active set (row indices into user rows then
    box rows) from a related previous solve.  Raises ConvergenceFailure if
    the iteration budget runs out first.
    """
    if kernel is None:
        kernel = RidgeKernel(inst.phi, inst.y, inst.lam)
    if tol is None:
        tol = 1e-8 * kernel.scale

    a_all, b_all = _stack_box_rows(inst)
    n_rows = a_all.shape[0]
    n_user = inst.rows_a.shape[0]

    # degenerate rows with a zero normal: either vacuous or plainly infeasible
    zero_normal = np.zeros(n_rows, dtype=bool)
    if n_user:
        zero_normal[:n_user] = ~np.any(a_all[:n_user], axis=1)
    bad_zero = zero_normal & (b_all < -feas_tol)
    if np.any(bad_zero):
        bad = int(np.nonzero(bad_zero)[0][0])
        return QpSolution(
            w=np.zeros(inst.m), objective=float("nan"), kkt_residual=float("inf"),
            status="infeasible", active=(bad,), n_user_rows=n_user,
            certificate=f"row {bad} requires 0 <= {b_all[bad]}",
        )

    active = _ActiveSet(kernel, a_all)
    w = kernel.w_free.copy()
    u = np.zeros(0)

    if warm_active:
        seed_rows = [i for i in dict.fromkeys(warm_active) if 0 <= i < n_rows]
        w_seed, u_seed, ok = _warm_start(kernel, a_all, b_all, active, seed_rows)
        if ok:
            w, u = w_seed, u_seed
        else:
            active = _ActiveSet(kernel, a_all)

    steps = 0
    while True:
        viol = a_all @ w - b_all
        viol[zero_normal] = -np.inf
        p = int(np.argmax(viol))
        if viol[p] <= feas_tol:
            break
        u_p = 0.0
        while True:
            steps += 1
            if steps > max_iter:
                raise ConvergenceFailure(
                    f"active-set iteration budget ({max_iter}) exhausted"
                )
            n_p = a_all[p]
            hinv_np = kernel.hinv(n_p)
            z, r = active.directions(n_p, hinv_np)
            znp = float(n_p @ z)
            scale_p = float(n_p @ hinv_np) + 1e-30
            if znp <= 1e-12 * scale_p:
                # no primal progress: n_p lies in the span of the active
                # normals; a non-positive dual direction proves the rows
                # admit no common solution
                blocking = r > 1e-13
                if not blocking.any():
                    cert_rows = tuple(sorted(set(active.idx) | {p}))
                    return QpSolution(
                        w=w, objective=float("nan"), kkt_residual=float("inf"),
                        status="infeasible", active=cert_rows,
                        multipliers=np.append(u, u_p), n_user_rows=n_user,
                        certificate=(
                            "rows " + ", ".join(map(str, cert_rows))
                            + " admit no common solution"
                        ),
                    )
                ratios = np.where(blocking, u / np.where(blocking, r, 1.0), np.inf)
                k = int(np.argmin(ratios))
                t = float(ratios[k])
                u = np.delete(u - t * r, k)
                u_p += t
                active.drop(k)
                continue
            viol_p = float(n_p @ w - b_all[p])
            t_full = viol_p / znp
            blocking = r > 1e-13
            if blocking.any():
                ratios = np.where(blocking, u / np.where(blocking, r, 1.0), np.inf)
                k = int(np.argmin(ratios))
                t_part = float(ratios[k])
            else:
                k, t_part = -1, np.inf
            t = min(t_full, t_part)
            w = w - t * z
            if u.size:
                u = u - t * r
            u_p += t
            if t_full <= t_part:
                active.add(p, hinv_np)
                u = np.append(u, u_p)
                break
            active.drop(k)
            u = np.delete(u, k)

    if active.idx:
        # polish: re-solve the equality-constrained optimum on the final
        # active set, which pins the KKT residual at machine precision
        polished = _equality_solve(kernel, a_all, b_all, active.idx)
        if polished is not None:
            w_pol, mu = polished
            if np.all(mu >= -1e-9):
                viol_pol = a_all @ w_pol - b_all
                viol_pol[zero_normal] = -np.inf
                if float(viol_pol.max(initial=-np.inf)) <= feas_tol:
                    w, u = w_pol, np.maximum(mu, 0.0)

    kkt = kkt_residual(inst, w, tuple(active.idx), u)
    if kkt > max(tol, feas_tol):
        raise ConvergenceFailure(
            f"KKT residual {kkt:.3e} above tolerance {max(tol, feas_tol):.3e}"
        )
    return QpSolution(
        w=w,
        objective=inst.objective(w),
        kkt_residual=kkt,
        status="optimal",
        active=tuple(active.idx),
        multipliers=u.copy(),
        n_user_rows=n_user,
    )


def _warm_start(kernel, a_all, b_all, active: _ActiveSet, seed_rows: list[int]):
    """Build a valid dual-feasible starting state from a previous active set.

    Solves the equality-constrained optimum on the seeded rows, dropping
    rows with negative multipliers until all are non-negative; that state
    (tight rows, stationarity, u >= 0) is exactly the invariant the main
    loop maintains.
    """
    for row in seed_rows:
        n = a_all[row]
        hinv_n = kernel.hinv(n)
        # skip rows dependent on the already-seeded normals (same criterion
        # the main loop uses before adding a row)
        z, _ = active.directions(n, hinv_n)
        if float(n @ z) <= 1e-12 * (float(n @ hinv_n) + 1e-30):
            continue
        active.add(row, hinv_n)
    while active.idx:
        solved = _equality_solve(kernel, a_all, b_all, active.idx)
        if solved is None:
            return None, None, False
        w, mu = solved
        if np.all(mu >= 0.0):
            return w, mu, True
        active.drop(int(np.argmin(mu)))
    return kernel.w_free.copy(), np.zeros(0), True


def kkt_residual(
    inst: QpInstance, w: np.ndarray, active: tuple[int, ...], multipliers: np.ndarray
) -> float:
    """Worst of the stationarity / feasibility / complementarity residuals.

    Stationarity is scaled by (1 + ||Phi^T y||_inf) so the figure is
    comparable across data scales.
    """
    a_all, b_all = _stack_box_rows(inst)
    grad = 2.0 * (inst.phi.T @ (inst.phi @ w - inst.y) + inst.lam * w)
    for i, idx in enumerate(active):
        grad += multipliers[i] * a_all[idx]
    scale = 1.0 + float(np.max(np.abs(inst.phi.T @ inst.y), initial=0.0))
    stationarity = float(np.max(np.abs(grad), initial=0.0)) / scale
    slack = a_all @ w - b_all
    keep = np.any(a_all, axis=1) | (b_all >= 0)
    feas = float(np.max(slack[keep], initial=-np.inf))
    comp = 0.0
    for i, idx in enumerate(active):
        comp = max(comp, abs(multipliers[i] * slack[idx]) / scale)
    return max(stationarity, max(feas, 0.0), comp)
