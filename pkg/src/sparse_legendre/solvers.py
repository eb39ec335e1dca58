"""l1-minimization and greedy sparse recovery on a preconditioned system.

All solvers take a :class:`~sparse_legendre.sensing.SensingSystem` and the
*raw* sample values ``y``; the preconditioner is applied internally.

* :func:`solve_bpdn` minimizes ``||z||_1`` subject to
  ``||A phi z - A y||_2 <= sqrt(m) eps`` (``eps = 0`` is basis pursuit).
* :func:`solve_cosamp` and :func:`solve_iht` work on the normalized system
  ``A phi / sqrt(m)`` and ``A y / sqrt(m)``.
"""
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

__all__ = [
    "SolverOptions",
    "SparseSignal",
    "RecoveryResult",
    "RecoveryBounds",
    "RIP_THRESHOLD",
    "solve_bpdn",
    "solve_cosamp",
    "solve_iht",
    "hard_threshold",
    "best_s_term",
    "rip_recovery_bounds",
    "relative_error",
]

RIP_THRESHOLD = 3.0 / (4.0 + math.sqrt(6.0))


@dataclass
class SolverOptions:
    """Flat solver options.

    ``max_iters``, ``res_tol`` and ``obj_tol`` are shared by all solvers;
    the remaining keys are solver specific.
    """

    max_iters: int = 200_000
    res_tol: float = 1e-9
    obj_tol: float = 1e-10
    rho: float = None
    polish: bool = True
    polish_every: int = 10
    dual_tol: float = 1e-9
    normalize: bool = True
    divergence_factor: float = 1e8
    patience: int = 50
    step: str = "unit"

    @classmethod
    def from_dict(cls, d):
        if d is None:
            return cls()
        if isinstance(d, cls):
            return d
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown solver options: {sorted(unknown)}")
        return cls(**d)


@dataclass
class SparseSignal:
    """An s-sparse coefficient vector."""

    coeffs: np.ndarray
    support: np.ndarray = None

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        self.support = np.flatnonzero(self.coeffs)

    @property
    def s(self):
        return self.support.size

    @classmethod
    def random(cls, N, s, rng):
        """Uniformly random support of size ``s``, i.i.d. standard normal values."""
        c = np.zeros(N)
        if s:
            support = np.sort(rng.choice(N, size=s, replace=False))
            c[support] = rng.standard_normal(s)
        return cls(c)


@dataclass
class RecoveryResult:
    solution: np.ndarray
    iterations: int
    final_residual: float
    objective: float
    converged: bool
    method: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def support(self):
        return np.flatnonzero(self.solution)

    def to_dict(self):
        d = asdict(self)
        d["solution"] = np.asarray(self.solution).tolist()
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def relative_error(truth, estimate):
    """``||truth - estimate|| / ||truth||``; absolute when ``truth`` is zero."""
    truth = np.asarray(truth, dtype=float)
    err = float(np.linalg.norm(truth - np.asarray(estimate, dtype=float)))
    nrm = float(np.linalg.norm(truth))
    return err / nrm if nrm > 0 else err


def _top_indices(x, s):
    # stable sort: among equal magnitudes the lowest index wins
    return np.sort(np.argsort(-np.abs(x), kind="stable")[:s])


def hard_threshold(x, s):
    """Keep the ``s`` largest-magnitude entries of ``x`` (ties: lowest index)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    if s > 0:
        idx = _top_indices(x, s)
        out[idx] = x[idx]
    return out


def best_s_term(x, s, p=1):
    """Best s-term approximation of ``x`` and its l_p error ``sigma_s(x)_p``."""
    x = np.asarray(x, dtype=float)
    if not 0 <= s <= x.size:
        raise ValueError(f"s must lie in [0, {x.size}], got {s}")
    approx = hard_threshold(x, s)
    return approx, float(np.linalg.norm(x - approx, ord=p))


@dataclass(frozen=True)
class RecoveryBounds:
    """Error bounds implied by ``delta_2s`` for l1 recovery.

    ``applies`` is False when ``delta_2s`` is not below the recovery
    threshold; the bound fields are then ``inf``.
    """

    applies: bool
    l2_bound: float
    l1_bound: float
    C1: float
    C2: float
    D1: float
    D2: float


def rip_recovery_bounds(delta_2s, sigma_s, eps, s):
    """Evaluate ``C1 sigma/sqrt(s) + C2 eps`` and ``D1 sigma + D2 sqrt(s) eps``.

    The constants follow the RIP -> robust null space property route: with
    ``d = delta_2s`` and ``q = sqrt(1 - d**2) - d/4`` the matrix has the l2
    robust null space property with ``rho = d/q`` and ``tau = sqrt(1+d)/q``,
    giving ``C1 = 2(1+rho)**2/(1-rho)``, ``C2 = 2(3+rho)tau/(1-rho)``,
    ``D1 = 2(1+rho)/(1-rho)``, ``D2 = 4 tau/(1-rho)`` for noise
    ``||eta||_2 <= eps``.
    """
    if delta_2s < 0:
        raise ValueError("delta_2s must be non-negative")
    if s < 1 or sigma_s < 0 or eps < 0:
        raise ValueError("need s >= 1, sigma_s >= 0, eps >= 0")
    if delta_2s >= RIP_THRESHOLD:
        inf = math.inf
        return RecoveryBounds(False, inf, inf, inf, inf, inf, inf)
    d = float(delta_2s)
    q = math.sqrt(1.0 - d * d) - d / 4.0
    rho, tau = d / q, math.sqrt(1.0 + d) / q
    C1 = 2 * (1 + rho) ** 2 / (1 - rho)
    C2 = 2 * (3 + rho) * tau / (1 - rho)
    D1 = 2 * (1 + rho) / (1 - rho)
    D2 = 4 * tau / (1 - rho)
    l2 = C1 * sigma_s / math.sqrt(s) + C2 * eps
    l1 = D1 * sigma_s + D2 * math.sqrt(s) * eps
    return RecoveryBounds(True, l2, l1, C1, C2, D1, D2)


def _prepared(system, y):
    y = np.asarray(y, dtype=float)
    if y.shape != (system.m,):
        raise ValueError(f"expected {system.m} sample values, got shape {y.shape}")
    return system.composite, system.precond_diag * y


class _BallProjector:
    """Euclidean projection onto ``{x : ||B x - b||_2 <= r}``.

    Uses the thin SVD of ``B``.  The multiplier of the projection solves a
    secular equation, found by Newton's method on ``1/||g(mu)||``.
    """

    def __init__(self, B, b, r):
        U, sv, Vt = np.linalg.svd(B, full_matrices=False)
        tol = sv[0] * max(B.shape) * np.finfo(float).eps if sv.size else 0.0
        k = int(np.sum(sv > tol))
        self.U, self.s, self.Vt = U[:, :k], sv[:k], Vt[:k]
        self.b_range = self.U.T @ b
        self.perp2 = max(float(b @ b - self.b_range @ self.b_range), 0.0)
        self.radius = r
        self.slack2 = r * r - self.perp2
        self.feasible = self.slack2 >= -1e-12 * max(float(b @ b), 1e-300)
        if not self.feasible:
            # inconsistent data: fall back to the least-squares level set
            self.slack2 = 0.0
        self.s2 = self.s ** 2
        self._mu = 0.0

    def __call__(self, v):
        coef = self.Vt @ v
        t = self.s * coef - self.b_range
        t2 = float(t @ t)
        if t2 <= self.slack2:
            return v
        if self.slack2 <= 0.0:
            return v - self.Vt.T @ (t / self.s)
        target = 1.0 / math.sqrt(self.slack2)
        mu = 0.0
        for _ in range(60):
            denom = 1.0 + mu * self.s2
            g = t / denom
            n = math.sqrt(float(g @ g))
            dn = -float(np.sum(g * g * self.s2 / denom)) / n
            step = (1.0 / n - target) / (-dn / (n * n))
            mu_new = mu - step
            if mu_new <= 0.0:
                mu_new = 0.5 * mu
            if abs(mu_new - mu) <= 1e-15 * max(mu_new, 1e-300):
                mu = mu_new
                break
            mu = mu_new
        self._mu = mu
        return v - self.Vt.T @ (mu * self.s * t / (1.0 + mu * self.s2))


def _certify(B, b, r, support, signs, w, dual_tol):
    """Try to build an exact KKT pair on the given support.

    Returns the polished solution if it is primal feasible, sign consistent
    and admits a dual vector with ``||B^T lam||_inf <= 1 + dual_tol``.
    """
    m, N = B.shape
    k = support.size
    if k == 0 or k > m:
        return None
    Bs = B[:, support]
    G = Bs.T @ Bs
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        return None
    solveG = lambda rhs: np.linalg.solve(L.T, np.linalg.solve(L, rhs))
    z_ls = solveG(Bs.T @ b)
    r_ls = b - Bs @ z_ls
    r_ls2 = float(r_ls @ r_ls)
    bn = max(float(np.linalg.norm(b)), 1e-300)
    if r <= 0.0:
        if math.sqrt(r_ls2) > 1e-10 * bn:
            return None
        zS = z_ls
        # closest dual vector to the ADMM estimate that matches the signs
        lam0 = np.linalg.lstsq(B.T, w, rcond=None)[0]
        lam = lam0 + Bs @ solveG(signs - Bs.T @ lam0)
    else:
        if r_ls2 > r * r:
            return None
        Ginv_sig = solveG(signs)
        quad = float(signs @ Ginv_sig)
        inv_mu = math.sqrt((r * r - r_ls2) / quad)
        zS = z_ls - inv_mu * Ginv_sig
        res = b - Bs @ zS
        lam = res / inv_mu
    if np.any(np.sign(zS) != signs):
        return None
    if np.max(np.abs(B.T @ lam)) > 1.0 + dual_tol:
        return None
    z = np.zeros(N)
    z[support] = zS
    return z


def solve_bpdn(system, y, eps, opts=None):
    """Noise-aware l1-minimization on the preconditioned system.

    Solves ``min ||z||_1  s.t.  ||A phi z - A y||_2 <= sqrt(m) eps`` by ADMM
    on the split ``x = z`` with ``x`` constrained to the residual ball (an
    exact projection) and ``z`` carrying the l1 norm (soft thresholding).
    The penalty is balanced against the residuals every few iterations.
    When the support of ``z`` settles, the candidate solution on that
    support is computed in closed form and accepted if it passes an exact
    KKT check; otherwise the iteration runs until the residual and
    objective tolerances are met.

    Parameters
    ----------
    system : SensingSystem
    y : array
        Raw (un-preconditioned) sample values, length m.
    eps : float
        Noise level; ``eps = 0`` gives equality-constrained basis pursuit.
    opts : SolverOptions or dict, optional
    """
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    opts = SolverOptions.from_dict(opts)
    B, b = _prepared(system, y)
    m, N = B.shape
    radius = math.sqrt(m) * float(eps)
    method = "BP" if eps == 0 else "BPDN"
    bnorm = float(np.linalg.norm(b))

    def result(z, iters, converged, **diag):
        res = float(np.linalg.norm(B @ z - b))
        return RecoveryResult(z, iters, res, float(np.abs(z).sum()), converged, method, diag)

    if bnorm <= radius:
        return result(np.zeros(N), 0, True, status="zero_feasible")

    proj = _BallProjector(B, b, radius)
    r_eff = radius if proj.feasible else math.sqrt(proj.perp2)
    x0 = proj(np.zeros(N))
    rho = opts.rho if opts.rho else N / max(float(np.abs(x0).sum()), 1e-300)
    z = x0.copy()
    u = np.zeros(N)
    last_support = None
    obj_old = math.inf
    status = "max_iters"
    converged = False
    x = x0
    it = 0
    for it in range(1, opts.max_iters + 1):
        x = proj(z - u)
        v = x + u
        z_old = z
        z = np.sign(v) * np.maximum(np.abs(v) - 1.0 / rho, 0.0)
        u = v - z

        if it % opts.polish_every == 0:
            if opts.polish:
                support = np.flatnonzero(z)
                if last_support is not None and np.array_equal(support, last_support):
                    zp = _certify(B, b, r_eff, support, np.sign(z[support]), rho * u,
                                  opts.dual_tol)
                    if zp is not None:
                        status = "certified"
                        converged = proj.feasible
                        x = zp
                        break
                last_support = support
            pri = float(np.linalg.norm(x - z))
            dual = rho * float(np.linalg.norm(z - z_old))
            scale = max(float(np.linalg.norm(x)), 1e-300)
            obj = float(np.abs(x).sum())
            if (pri <= opts.res_tol * scale and dual <= opts.res_tol * rho * max(
                    float(np.linalg.norm(u)), 1e-300)
                    and abs(obj - obj_old) <= opts.obj_tol * max(obj, 1.0)):
                status = "tolerance"
                converged = proj.feasible
                break
            obj_old = obj
            # residual balancing of the penalty
            if pri > 10.0 * dual:
                rho *= 2.0
                u *= 0.5
            elif dual > 10.0 * pri:
                rho *= 0.5
                u *= 2.0
    if not proj.feasible:
        status = "infeasible"
    return result(x, it, converged, status=status, rho=rho)


def _normalized(system, y, normalize):
    B, b = _prepared(system, y)
    if normalize:
        root = math.sqrt(system.m)
        return B / root, b / root
    return B, b


def _check_sparsity(s, m):
    if int(s) != s or not 1 <= s <= m / 2:
        raise ValueError(f"sparsity must satisfy 1 <= s <= m/2 = {m / 2}, got {s}")
    return int(s)


def solve_cosamp(system, y, s, opts=None):
    """CoSaMP on the normalized system; returns an s-sparse vector."""
    opts = SolverOptions.from_dict(opts)
    s = _check_sparsity(s, system.m)
    Psi, yn = _normalized(system, y, opts.normalize)
    m, N = Psi.shape
    x = np.zeros(N)
    r = yn.copy()
    rnorm = float(np.linalg.norm(r))
    ynorm = rnorm
    if ynorm == 0.0:
        return RecoveryResult(x, 1, 0.0, 0.0, True, "CoSaMP", {"status": "zero_data"})
    best_x, best_r = x, rnorm
    since_best = 0
    converged, status, it = False, "max_iters", 0
    for it in range(1, opts.max_iters + 1):
        proxy = Psi.T @ r
        omega = _top_indices(proxy, 2 * s)
        T = np.union1d(omega, np.flatnonzero(x))
        bT = np.linalg.lstsq(Psi[:, T], yn, rcond=None)[0]
        b_full = np.zeros(N)
        b_full[T] = bT
        x = hard_threshold(b_full, s)
        r = yn - Psi @ x
        rn_new = float(np.linalg.norm(r))
        stalled = abs(rnorm - rn_new) <= opts.res_tol * rnorm
        rnorm = rn_new
        if rnorm < best_r:
            best_x, best_r, since_best = x, rnorm, 0
        else:
            since_best += 1
        if rnorm <= opts.res_tol * ynorm:
            status, converged = "residual", True
            break
        if stalled:
            status, converged = "stagnated", True
            break
        if since_best >= opts.patience:
            status, converged = "no_progress", True
            break
    scale = math.sqrt(m) if opts.normalize else 1.0
    return RecoveryResult(best_x, it, best_r * scale, float(np.abs(best_x).sum()), converged,
                          "CoSaMP", {"status": status})


def _niht_step(Psi, x, g, support, s, kappa=3.0, shrink=0.5):
    """Normalized IHT step length with the support-change safeguard."""
    gs = g[support]
    denom = float(np.linalg.norm(Psi[:, support] @ gs)) ** 2
    mu = float(gs @ gs) / denom if denom > 0 else 1.0
    for _ in range(60):
        x_new = hard_threshold(x + mu * g, s)
        new_support = np.flatnonzero(x_new)
        if np.array_equal(new_support, support):
            return x_new
        diff = x_new - x
        d2 = float(np.linalg.norm(Psi @ diff)) ** 2
        omega = (1.0 - shrink) * float(diff @ diff) / d2 if d2 > 0 else math.inf
        if mu <= omega:
            return x_new
        mu /= kappa * (1.0 - shrink)
    return x_new


def solve_iht(system, y, s, opts=None):
    """Iterative hard thresholding ``x <- H_s(x + mu Psi^T (y - Psi x))``.

    ``opts.step = "unit"`` uses ``mu = 1`` on the normalized system.  That
    step is only stable when the restricted spectrum of ``Psi`` stays below
    2; without the ``1/sqrt(m)`` normalization it blows up, which is
    detected and reported as ``converged=False``.  ``opts.step =
    "normalized"`` picks ``mu`` per iteration from the current support
    (normalized IHT), which is stable regardless of scaling.
    """
    opts = SolverOptions.from_dict(opts)
    if opts.step not in ("unit", "normalized"):
        raise ValueError(f"unknown IHT step rule {opts.step!r}")
    s = _check_sparsity(s, system.m)
    Psi, yn = _normalized(system, y, opts.normalize)
    m, N = Psi.shape
    x = np.zeros(N)
    ynorm = float(np.linalg.norm(yn))
    if ynorm == 0.0:
        return RecoveryResult(x, 1, 0.0, 0.0, True, "IHT", {"status": "zero_data"})
    rnorm = ynorm
    support = _top_indices(Psi.T @ yn, s)
    converged, status, it = False, "max_iters", 0
    for it in range(1, opts.max_iters + 1):
        g = Psi.T @ (yn - Psi @ x)
        if opts.step == "unit":
            x = hard_threshold(x + g, s)
        else:
            x = _niht_step(Psi, x, g, support, s)
            support = np.flatnonzero(x)
        rn_new = float(np.linalg.norm(yn - Psi @ x))
        if not math.isfinite(rn_new) or rn_new > opts.divergence_factor * ynorm:
            status = "diverged"
            break
        stalled = abs(rnorm - rn_new) <= opts.res_tol * rnorm
        rnorm = rn_new
        if rnorm <= opts.res_tol * ynorm:
            status, converged = "residual", True
            break
        if stalled:
            status, converged = "stagnated", True
            break
    scale = math.sqrt(m) if opts.normalize else 1.0
    return RecoveryResult(x, it, rnorm * scale, float(np.abs(x).sum()), converged, "IHT",
                          {"status": status, "step": opts.step})
