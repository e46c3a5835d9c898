"""Dense primal-dual interior-point kernel for separable convex programs.

Problems have the form::

    minimize    sum_j  0.5*quad[j]*x[j]**2 + lin[j]*x[j]  +  sum_t pwl_t(x[index_t])
    subject to  A_eq x  = b_eq          (multipliers y)
                A_in x <= b_in          (multipliers z >= 0)
                lower <= x <= upper     (multipliers z_lo, z_up >= 0)

with Lagrangian ``f + y'(A_eq x - b_eq) + z'(A_in x - b_in) + z_lo'(lower - x)
+ z_up'(x - upper)``.  Each piecewise-linear term is the max of affine pieces
and is handled through an epigraph variable, so one Mehrotra
predictor-corrector loop serves QPs and LPs alike.

Variables with ``lower == upper`` are substituted out before the solve.
When the loop fails to converge, an elastic phase-I problem decides between
``INFEASIBLE`` (with a Farkas certificate), ``UNBOUNDED`` and
``NUMERICAL_FAILURE``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import warnings

from scipy.linalg import LinAlgError, LinAlgWarning, lu_factor, lu_solve, pinv

from .errors import DimensionMismatch, ValidationError

TARGET_TOL = 1e-9
ACCEPT_TOL = 1e-7
INFEASIBILITY_TOL = 1e-8
MAX_ITER = 200


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class PiecewiseTerm:
    """cost(x[index]) = max over pieces of slope*x + intercept."""

    index: int
    pieces: tuple[tuple[float, float], ...]


def _matrix(M, ncols: int) -> np.ndarray:
    if M is None:
        return np.zeros((0, ncols))
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        rows = M.shape[0] if M.ndim == 2 and ncols == 0 else 0
        return np.zeros((rows, ncols))
    return np.atleast_2d(M)


@dataclass
class ConvexProgram:
    n: int
    quad: np.ndarray | None = None
    lin: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_in: np.ndarray | None = None
    b_in: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    pwl: Sequence[PiecewiseTerm] = ()

    def __post_init__(self):
        n = self.n
        self.quad = np.zeros(n) if self.quad is None else np.asarray(self.quad, dtype=float)
        self.lin = np.zeros(n) if self.lin is None else np.asarray(self.lin, dtype=float)
        self.A_eq = _matrix(self.A_eq, n)
        self.A_in = _matrix(self.A_in, n)
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).ravel()
        self.b_in = np.zeros(0) if self.b_in is None else np.asarray(self.b_in, dtype=float).ravel()
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, dtype=float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float)
        self.pwl = tuple(self.pwl)
        for name, vec in (("quad", self.quad), ("lin", self.lin), ("lower", self.lower), ("upper", self.upper)):
            if vec.shape != (n,):
                raise DimensionMismatch(f"{name} has shape {vec.shape}, need ({n},)")
        if self.A_eq.shape != (len(self.b_eq), n):
            raise DimensionMismatch(f"A_eq shape {self.A_eq.shape} vs b_eq length {len(self.b_eq)}")
        if self.A_in.shape != (len(self.b_in), n):
            raise DimensionMismatch(f"A_in shape {self.A_in.shape} vs b_in length {len(self.b_in)}")
        if np.any(self.quad < 0):
            raise ValidationError("quadratic weights must be nonnegative")
        if np.any(self.lower > self.upper):
            raise ValidationError("lower bound exceeds upper bound")
        for term in self.pwl:
            if not 0 <= term.index < n or not term.pieces:
                raise ValidationError(f"bad piecewise term on variable {term.index}")

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        val = float(0.5 * self.quad @ (x * x) + self.lin @ x)
        for term in self.pwl:
            val += max(s * x[term.index] + c for s, c in term.pieces)
        return val


@dataclass
class FarkasCertificate:
    """Multipliers proving {A_eq x = b_eq, A_in x <= b_in, lower <= x <= upper} empty.

    ``A_eq'y + A_in'z - z_lo + z_up`` vanishes (up to ``residual``) while
    ``b_eq'y + b_in'z - lower'z_lo + upper'z_up = -gap`` with ``gap > 0``.
    """

    eq: np.ndarray
    ineq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    gap: float
    residual: float

    @property
    def confidence(self) -> float:
        return self.gap / max(self.residual, 1e-300)


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray
    eq_duals: np.ndarray
    ineq_duals: np.ndarray
    lower_duals: np.ndarray
    upper_duals: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int = 0
    certificate: FarkasCertificate | None = None
    violation: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class _Reduced:
    """The program after fixed-variable substitution, in extended variables.

    Extended variables are ``[x[free], w]`` with one epigraph ``w`` per
    piecewise term.  ``G`` stacks: user inequality rows, epigraph rows,
    finite lower bounds, finite upper bounds; ``tags`` records which.
    """

    prog: ConvexProgram
    free: np.ndarray
    fixed: np.ndarray
    x_fixed: np.ndarray
    P: np.ndarray
    q: np.ndarray
    A: np.ndarray
    b: np.ndarray
    eq_rows: np.ndarray
    G: np.ndarray
    h: np.ndarray
    tags: list[tuple[str, int]] = field(default_factory=list)
    trivial_eq: list[tuple[int, float]] = field(default_factory=list)
    trivial_in: list[tuple[int, float]] = field(default_factory=list)


def _reduce(p: ConvexProgram) -> _Reduced:
    fixed = np.flatnonzero(np.isfinite(p.lower) & (p.lower == p.upper))
    free = np.setdiff1d(np.arange(p.n), fixed)
    x_fixed = p.lower[fixed]
    nf, nw = len(free), len(p.pwl)
    pos = {j: k for k, j in enumerate(free)}

    b_eq = p.b_eq - p.A_eq[:, fixed] @ x_fixed
    A_eq = p.A_eq[:, free]
    b_in = p.b_in - p.A_in[:, fixed] @ x_fixed
    A_in = p.A_in[:, free]

    keep_eq, trivial_eq = [], []
    for r in range(len(b_eq)):
        if np.any(A_eq[r] != 0):
            keep_eq.append(r)
        elif b_eq[r] != 0:
            trivial_eq.append((r, b_eq[r]))
    rows, rhs, tags, trivial_in = [], [], [], []
    for r in range(len(b_in)):
        if np.any(A_in[r] != 0):
            rows.append(np.concatenate([A_in[r], np.zeros(nw)]))
            rhs.append(b_in[r])
            tags.append(("in", r))
        elif b_in[r] < 0:
            trivial_in.append((r, b_in[r]))
    fixed_set = dict(zip(fixed.tolist(), x_fixed.tolist()))
    for t, term in enumerate(p.pwl):
        for piece, (slope, icpt) in enumerate(term.pieces):
            row = np.zeros(nf + nw)
            row[nf + t] = -1.0
            if term.index in fixed_set:
                rhs.append(-(icpt + slope * fixed_set[term.index]))
            else:
                row[pos[term.index]] = slope
                rhs.append(-icpt)
            rows.append(row)
            tags.append(("epi", t))
    for k, j in enumerate(free):
        if np.isfinite(p.lower[j]):
            row = np.zeros(nf + nw)
            row[k] = -1.0
            rows.append(row)
            rhs.append(-p.lower[j])
            tags.append(("lo", int(j)))
    for k, j in enumerate(free):
        if np.isfinite(p.upper[j]):
            row = np.zeros(nf + nw)
            row[k] = 1.0
            rows.append(row)
            rhs.append(p.upper[j])
            tags.append(("up", int(j)))

    P = np.concatenate([p.quad[free], np.zeros(nw)])
    q = np.concatenate([p.lin[free], np.ones(nw)])
    A = np.hstack([A_eq[keep_eq], np.zeros((len(keep_eq), nw))])
    G = np.array(rows) if rows else np.zeros((0, nf + nw))
    return _Reduced(
        p, free, fixed, x_fixed, P, q, A, b_eq[keep_eq], np.array(keep_eq, dtype=int),
        G, np.array(rhs, dtype=float), tags, trivial_eq, trivial_in,
    )


def _inf(v) -> float:
    return float(np.abs(v).max(initial=0.0))


def _row_scale(M: np.ndarray) -> np.ndarray:
    if M.shape[0] == 0:
        return np.ones(0)
    nrm = np.abs(M).max(axis=1)
    return np.where(nrm > 0, 1.0 / np.where(nrm > 0, nrm, 1.0), 1.0)


@dataclass
class _IpmOut:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    converged: bool
    diverged: bool
    iterations: int


def _factor(K: np.ndarray):
    """Solver for K; falls back to a pseudo-inverse when LU meets a zero pivot.

    Exact zero pivots appear when huge barrier weights swamp the
    regularization in floating point, typically on degenerate LPs.
    """
    lu = lu_factor(K)
    piv = np.abs(np.diag(lu[0]))
    if np.all(np.isfinite(lu[0])) and piv.min(initial=np.inf) > 1e-13 * piv.max(initial=0.0):
        return lambda r: lu_solve(lu, r)
    Kp = pinv(K)
    return lambda r: Kp @ r


def _solve_kkt(K: np.ndarray, rhs: np.ndarray, solve) -> np.ndarray:
    sol = solve(rhs)
    for _ in range(2):
        r = rhs - K @ sol
        if not np.all(np.isfinite(r)):
            break
        trial = sol + solve(r)
        if _inf(rhs - K @ trial) < _inf(r):
            sol = trial
        else:
            break
    return sol


def _newton_step(assemble, W, reg, s, z, rd, rp, rg, mu, G, n, max_step):
    """Mehrotra predictor-corrector direction, or None if the solve breaks down."""
    mi = len(s)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        K, Kreg = assemble(W, reg)
        try:
            solve = _factor(Kreg)
        except (LinAlgError, ValueError):
            return None

        def direction(rc):
            t = (-rc + z * rg) / s
            rhs = np.concatenate([-rd - G.T @ t, -rp])
            sol = _solve_kkt(K, rhs, solve)
            dx, dy = sol[:n], sol[n:]
            Gdx = G @ dx
            return dx, dy, -rg - Gdx, t + W * Gdx

        try:
            dx, dy, ds, dz = direction(s * z)
            if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dz))):
                return None
            alpha = min(max_step(s, ds), max_step(z, dz))
            mu_aff = float((s + alpha * ds) @ (z + alpha * dz)) / mi
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
            dx, dy, ds, dz = direction(s * z + ds * dz - sigma * mu)
        except (ValueError, FloatingPointError):
            return None
    if not (np.all(np.isfinite(dx)) and np.all(np.isfinite(dy)) and np.all(np.isfinite(dz))):
        return None
    return dx, dy, ds, dz


def _mehrotra(P, q, A, b, G, h, tol=TARGET_TOL, max_iter=MAX_ITER) -> _IpmOut:
    n, me, mi = len(q), len(b), len(h)
    nb = 1.0 + max(np.abs(b).max(initial=0.0), np.abs(h).max(initial=0.0))
    nq = 1.0 + np.abs(q).max(initial=0.0)
    Pm = np.diag(P)

    def assemble(W, reg=1e-11):
        M = Pm + G.T @ (W[:, None] * G)
        K = np.block([[M, A.T], [A, np.zeros((me, me))]])
        Kreg = K + np.diag(np.concatenate([np.full(n, reg), np.full(me, -reg)]))
        return K, Kreg

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        K, Kreg = assemble(np.ones(mi))
        rhs = np.concatenate([-q + G.T @ h, b])
        try:
            sol = _solve_kkt(K, rhs, _factor(Kreg))
        except (LinAlgError, ValueError):
            sol = np.zeros(n + me)
    x, y = sol[:n], sol[n:]
    if mi == 0:
        rd = Pm @ x + q + A.T @ y
        ok = _inf(A @ x - b) <= tol * nb and _inf(rd) <= tol * nq
        return _IpmOut(x, y, np.zeros(0), np.zeros(0), bool(ok), not ok, 0)

    s = h - G @ x
    z = np.ones(mi)
    ds_shift = max(-1.5 * s.min(), 0.0)
    s = s + ds_shift
    if s @ z > 0:
        s = s + 0.5 * (s @ z) / z.sum()
        z = z + 0.5 * (s @ z) / s.sum()
    s = np.maximum(s, 1e-4 * nb)

    def max_step(v, dv):
        neg = dv < 0
        if not np.any(neg):
            return 1.0
        with np.errstate(over="ignore"):
            return min(1.0, float(np.min(-v[neg] / dv[neg])))

    converged = diverged = False
    it = 0
    # near the end the Newton systems get badly conditioned and residuals can
    # creep back up, so the best iterate seen is kept
    best = (np.inf, x, y, z, s)
    for it in range(1, max_iter + 1):
        rd = Pm @ x + q + A.T @ y + G.T @ z
        rp = A @ x - b
        rg = G @ x + s - h
        mu = float(s @ z) / mi
        pres = max(_inf(rp), _inf(rg)) / nb
        dres = _inf(rd) / nq
        merit = max(pres, dres, mu)
        if merit < best[0]:
            best = (merit, x, y, z, s)
        if pres <= tol and dres <= tol and mu <= tol:
            converged = True
            break
        if merit > 1e6 * best[0] and best[0] <= ACCEPT_TOL:
            break
        scale = max(np.abs(x).max(initial=0.0), np.abs(z).max(initial=0.0), np.abs(y).max(initial=0.0))
        if not np.isfinite(scale) or scale > 1e13 * max(nb, nq):
            diverged = True
            break

        # slacks can underflow on infeasible runs; a huge finite weight still factors
        W = z / np.maximum(s, 1e-300)
        if not np.all(np.isfinite(W)):
            break
        step = None
        # retry with heavier regularization when the factorization breaks down
        for reg in (1e-11, 1e-9, 1e-7):
            step = _newton_step(assemble, W, reg, s, z, rd, rp, rg, mu, G, n, max_step)
            if step is not None:
                break
        if step is None:
            break
        dx, dy, ds, dz = step
        alpha = min(max_step(s, ds), max_step(z, dz))
        alpha = min(1.0, 0.995 * alpha)
        if alpha < 1e-12:
            break
        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds
        z = z + alpha * dz
    if not converged and not diverged:
        merit, x, y, z, s = best
        converged = merit <= ACCEPT_TOL
    return _IpmOut(x, y, z, s, converged, diverged, it)


def _kkt_error(P, q, A, b, G, h, x, y, z) -> float:
    nb = 1.0 + max(_inf(b), _inf(h))
    nq = 1.0 + _inf(q)
    slack = h - G @ x
    pres = max(_inf(A @ x - b), _inf(np.maximum(-slack, 0.0))) / nb
    dres = _inf(P * x + q + A.T @ y + G.T @ z) / nq
    comp = _inf(z * slack)
    return max(pres, dres, comp, _inf(np.maximum(-z, 0.0)))


def _polish(P, q, A, b, G, h, out: _IpmOut) -> bool:
    """Re-solve with the apparent active set as equalities; keep it if it is better.

    Interior-point iterates approach a boundary point only at the rate
    sqrt(mu) along directions where complementarity is not strict.  Solving
    the equality-constrained KKT system on the guessed active set removes
    that error whenever the guess is right.  Degenerate rows have slack and
    dual of similar size, so a few thresholds on their ratio are tried.
    """
    if len(h) == 0:
        return False
    best = _kkt_error(P, q, A, b, G, h, out.x, out.y, out.z)
    found = None
    seen = set()
    for ratio in (1.0, 1e-2, 1e2):
        act = out.z > ratio * out.s
        key = act.tobytes()
        if key in seen:
            continue
        seen.add(key)
        cand = _polish_on(P, q, A, b, G, h, out, act)
        if cand is not None and cand[0] < best:
            best, found = cand[0], cand[1:]
    if found is None or best >= ACCEPT_TOL:
        return False
    out.x, out.y, out.z = found
    out.s = np.maximum(h - G @ out.x, 0.0)
    return True


def _polish_on(P, q, A, b, G, h, out: _IpmOut, act: np.ndarray):
    Ga = G[act]
    n, me, ma = len(q), len(b), int(act.sum())
    # proximal regularization keeps the solve well posed when the active set
    # leaves flat directions; repeating it converges to a point on that set
    delta = 1e-7
    K = np.block([
        [np.diag(P), A.T, Ga.T],
        [A, np.zeros((me, me)), np.zeros((me, ma))],
        [Ga, np.zeros((ma, me)), np.zeros((ma, ma))],
    ])
    Kreg = K + np.diag(np.concatenate([np.full(n, delta), np.full(me + ma, -delta)]))
    rhs = np.concatenate([-q, b, h[act]])
    sol = np.concatenate([out.x, out.y, out.z[act]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            solve = _factor(Kreg)
        except (LinAlgError, ValueError):
            return None
        for _ in range(50):
            r = rhs - K @ sol
            if not np.all(np.isfinite(r)) or _inf(r) <= 1e-14 * (1.0 + _inf(rhs)):
                break
            sol = sol + solve(r)
    if not np.all(np.isfinite(sol)):
        return None
    x, y = sol[:n], sol[n:n + me]
    z = np.zeros(len(h))
    z[act] = np.maximum(sol[n + me:], 0.0)
    return _kkt_error(P, q, A, b, G, h, x, y, z), x, y, z


def _solve_scaled(P, q, A, b, G, h, tol, max_iter, polish=True) -> tuple[_IpmOut, np.ndarray, np.ndarray]:
    ra, rg = _row_scale(A), _row_scale(G)
    As, bs, Gs, hs = ra[:, None] * A, ra * b, rg[:, None] * G, rg * h
    out = _mehrotra(P, q, As, bs, Gs, hs, tol, max_iter)
    if out.converged and polish:
        _polish(P, q, As, bs, Gs, hs, out)
    out.y = ra * out.y
    out.z = rg * out.z
    out.s = out.s / rg if len(rg) else out.s
    return out, ra, rg


def _phase_one(red: _Reduced, tol=TARGET_TOL, max_iter=MAX_ITER):
    """min violation s.t. A x + e+ - e- = b, G x - sigma <= h; returns (violation, x, y, z)."""
    n, me, mi = len(red.q), len(red.b), len(red.h)
    eps = 1e-10
    nv = n + 1 + 2 * me
    P = np.concatenate([np.full(n, 2 * eps), np.zeros(1 + 2 * me)])
    q = np.concatenate([np.zeros(n), np.ones(1 + 2 * me)])
    ra = _row_scale(red.A)
    rg = _row_scale(red.G)
    A = np.hstack([ra[:, None] * red.A, np.zeros((me, 1)), np.diag(ra), -np.diag(ra)])
    G = np.vstack([
        np.hstack([rg[:, None] * red.G, -rg[:, None], np.zeros((mi, 2 * me))]),
        np.hstack([np.zeros((1 + 2 * me, n)), -np.eye(1 + 2 * me)]),
    ])
    h = np.concatenate([rg * red.h, np.zeros(1 + 2 * me)])
    out = _mehrotra(P, q, A, ra * red.b, G, h, tol, max_iter)
    v = out.x[n:]
    violation = float(max(v[0], 0.0) + np.maximum(v[1:], 0.0).sum())
    return violation, out.x[:n], ra * out.y, rg * out.z[:mi], out.converged


def _expand_x(red: _Reduced, xr: np.ndarray) -> np.ndarray:
    x = np.empty(red.prog.n)
    x[red.free] = xr[: len(red.free)]
    x[red.fixed] = red.x_fixed
    return x


def _certificate(red: _Reduced, y: np.ndarray, z: np.ndarray) -> FarkasCertificate:
    p = red.prog
    eq = np.zeros(len(p.b_eq))
    ineq = np.zeros(len(p.b_in))
    lo = np.zeros(p.n)
    up = np.zeros(p.n)
    eq[red.eq_rows] = y
    for r, val in red.trivial_eq:
        eq[r] = -np.sign(val)
    for r, _ in red.trivial_in:
        ineq[r] = 1.0
    z = np.maximum(z, 0.0)
    for (kind, idx), zk in zip(red.tags, z):
        if kind == "in":
            ineq[idx] = zk
        elif kind == "lo":
            lo[idx] += zk
        elif kind == "up":
            up[idx] += zk
    r = p.A_eq.T @ eq + p.A_in.T @ ineq
    r_fixed = r[red.fixed] - lo[red.fixed] + up[red.fixed]
    lo[red.fixed] += np.maximum(r_fixed, 0.0)
    up[red.fixed] += np.maximum(-r_fixed, 0.0)
    stat = p.A_eq.T @ eq + p.A_in.T @ ineq - lo + up
    value = p.b_eq @ eq + p.b_in @ ineq
    value -= float(p.lower[lo > 0] @ lo[lo > 0])
    value += float(p.upper[up > 0] @ up[up > 0])
    return FarkasCertificate(eq, ineq, lo, up, float(-value), float(np.abs(stat).max(initial=0.0)))


def _residual(p: ConvexProgram, x, y, z, zlo, zup, w_duals) -> float:
    """Max of primal, dual, complementarity and stationarity residuals."""
    grad = p.quad * x + p.lin + p.A_eq.T @ y + p.A_in.T @ z - zlo + zup
    for term, theta in zip(p.pwl, w_duals):
        grad[term.index] += sum(t * sl for t, (sl, _) in zip(theta, term.pieces))
    stat = np.abs(grad).max(initial=0.0)
    epi = max((abs(1.0 - sum(theta)) for theta in w_duals), default=0.0)
    slack_in = p.b_in - p.A_in @ x
    prim = max(
        np.abs(p.A_eq @ x - p.b_eq).max(initial=0.0),
        np.maximum(-slack_in, 0).max(initial=0.0),
        np.maximum(p.lower - x, 0).max(initial=0.0),
        np.maximum(x - p.upper, 0).max(initial=0.0),
    )
    dual = max(np.maximum(-z, 0).max(initial=0.0), np.maximum(-zlo, 0).max(initial=0.0),
               np.maximum(-zup, 0).max(initial=0.0))
    comp = np.abs(z * slack_in).max(initial=0.0)
    fin_lo = np.isfinite(p.lower)
    fin_up = np.isfinite(p.upper)
    comp = max(comp, np.abs(zlo[fin_lo] * (x - p.lower)[fin_lo]).max(initial=0.0),
               np.abs(zup[fin_up] * (p.upper - x)[fin_up]).max(initial=0.0))
    for term, theta in zip(p.pwl, w_duals):
        cur = max(sl * x[term.index] + c for sl, c in term.pieces)
        for t, (sl, c) in zip(theta, term.pieces):
            comp = max(comp, abs(t * (cur - sl * x[term.index] - c)))
    return float(max(stat, epi, prim, dual, comp))


def _empty_result(p: ConvexProgram, status: Status, x=None, cert=None, violation=0.0) -> SolveResult:
    x = np.full(p.n, np.nan) if x is None else x
    return SolveResult(status, x, np.zeros(len(p.b_eq)), np.zeros(len(p.b_in)),
                       np.zeros(p.n), np.zeros(p.n), np.nan, np.inf, 0, cert, violation)


def solve_convex(p: ConvexProgram, tol: float = TARGET_TOL, max_iter: int = MAX_ITER,
                 infeasibility_tol: float = INFEASIBILITY_TOL) -> SolveResult:
    """Solve ``p``; duals follow the sign convention in the module docstring."""
    red = _reduce(p)
    trivial = sum(abs(v) for _, v in red.trivial_eq) + sum(-v for _, v in red.trivial_in)
    if trivial > infeasibility_tol * (1.0 + max(_inf(p.b_eq), _inf(p.b_in))):
        cert = _certificate(red, np.zeros(len(red.b)), np.zeros(len(red.h)))
        return _empty_result(p, Status.INFEASIBLE, cert=cert, violation=trivial)

    out, _, _ = _solve_scaled(red.P, red.q, red.A, red.b, red.G, red.h, tol, max_iter)
    if not out.converged:
        scale = 1.0 + max(np.abs(red.b).max(initial=0.0), np.abs(red.h).max(initial=0.0))
        viol, _, y1, z1, _ = _phase_one(red)
        if viol > infeasibility_tol * scale:
            return _empty_result(p, Status.INFEASIBLE, cert=_certificate(red, y1, z1), violation=viol)
        status = Status.UNBOUNDED if out.diverged else Status.NUMERICAL_FAILURE
        res = _empty_result(p, status, x=_expand_x(red, out.x))
        res.iterations = out.iterations
        return res

    x = _expand_x(red, out.x)
    y = np.zeros(len(p.b_eq))
    y[red.eq_rows] = out.y
    z = np.zeros(len(p.b_in))
    zlo = np.zeros(p.n)
    zup = np.zeros(p.n)
    w_duals = [[] for _ in p.pwl]
    for (kind, idx), zk in zip(red.tags, out.z):
        if kind == "in":
            z[idx] = zk
        elif kind == "lo":
            zlo[idx] = zk
        elif kind == "up":
            zup[idx] = zk
        else:
            w_duals[idx].append(zk)
    if len(red.fixed):
        grad = p.quad * x + p.lin + p.A_eq.T @ y + p.A_in.T @ z
        for t, term in enumerate(p.pwl):
            if term.index in set(red.fixed.tolist()):
                grad[term.index] += sum(th * sl for th, (sl, _) in zip(w_duals[t], term.pieces))
        rf = grad[red.fixed]
        zlo[red.fixed] = np.maximum(rf, 0.0)
        zup[red.fixed] = np.maximum(-rf, 0.0)
    kkt = _residual(p, x, y, z, zlo, zup, w_duals)
    return SolveResult(Status.OPTIMAL, x, y, z, zlo, zup, p.objective(x), kkt, out.iterations)


@dataclass
class FeasibilityResult:
    feasible: bool
    x: np.ndarray
    violation: float
    certificate: FarkasCertificate | None


def find_feasible_point(p: ConvexProgram, tol: float = 1e-6) -> FeasibilityResult:
    """Phase-I test of the constraint set of ``p`` (its objective is ignored).

    ``violation`` is the least achievable max inequality violation plus total
    equality violation; the set is declared feasible when it is <= ``tol``.
    """
    red = _reduce(p)
    if red.trivial_eq or red.trivial_in:
        viol = sum(abs(v) for _, v in red.trivial_eq) + sum(-v for _, v in red.trivial_in)
        if viol > tol:
            cert = _certificate(red, np.zeros(len(red.b)), np.zeros(len(red.h)))
            return FeasibilityResult(False, np.full(p.n, np.nan), viol, cert)
    else:
        viol = 0.0
    if len(red.q) == 0:
        return FeasibilityResult(True, _expand_x(red, np.zeros(0)), viol, None)
    v, xr, y, z, _ = _phase_one(red)
    x = _expand_x(red, xr)
    total = v + viol
    if total > tol:
        return FeasibilityResult(False, x, total, _certificate(red, y, z))
    return FeasibilityResult(True, x, total, None)
