"""Block optimizers for the regularized Hawkes MLE.

The objective is maximized over the box Theta = A x B, with A the joint
(mu, alpha) block and B the beta block.  One sweep of the inertial proximal
alternating scheme updates the blocks in turn:

    (mu'', alpha'') = Pi_A((mu', alpha') + tau1 * g_A(mu', alpha', beta')
                           + gamma1 * ((mu', alpha') - (mu, alpha)))
    beta''          = Pi_B(beta' + tau2 * g_B(mu'', alpha'', beta')
                           + gamma2 * (beta' - beta))

where g_A, g_B are gradient blocks of the regularized log-likelihood and
primes denote (current, previous) iterates.  Viewing the sweep as a fixed
point map on the doubled state u = (theta', theta), Anderson acceleration
extrapolates through a rank-one-updated approximate inverse Jacobian H with
Powell damping and periodic restarts; a four-condition safeguard falls back
to the plain sweep whenever the accelerated candidate is not provably safe.

All runners are deterministic: identical inputs give identical traces.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .model import ParamVector

__all__ = [
    "HyperParamsError",
    "InfeasibleInitError",
    "HyperParams",
    "TraceRecord",
    "OptimResult",
    "OptimizerState",
    "ResidualSummary",
    "powell_phi",
    "ipalm_map",
    "run_palm",
    "run_ipalm",
    "run_aa_ipalm",
    "lyapunov_value",
    "residual_diagnostics",
    "estimate_lipschitz_bounds",
]


class HyperParamsError(ValueError):
    """Hyperparameter outside its admissible range."""


class InfeasibleInitError(ValueError):
    """Initial point outside the box domain."""


@dataclass(frozen=True)
class HyperParams:
    """Step-size, momentum, acceleration, and safeguard constants.

    When ``tau1``/``tau2`` are left unset they follow the step-size rule
    tau_i = 2 (1 - gamma_i) / ((1 + gamma_i) * lbar_i), which guarantees
    monotone descent of the Lyapunov sequence for gamma_i in [0, 1 - 2 eps].
    ``delta`` defaults to max(delta1, delta2) with
    delta_i = gamma_i * lbar_i / (2 (1 - eps - gamma_i)).

    Explicit overrides that break those relations (larger steps, smaller
    delta) are rejected by :meth:`validate` unless ``allow_noncompliant`` is
    set, in which case a warning is emitted and the values are used verbatim.
    """

    epsilon: float = 0.05
    gamma1: float = 0.0
    gamma2: float = 0.0
    lbar1: float = 1.0
    lbar2: float = 1.0
    tau1: float | None = None
    tau2: float | None = None
    omega_bar: float = 0.1
    nu: float = 0.1
    delta: float | None = None
    c1: float = 1e8
    c2: float = 1e8
    memory: int = 20
    max_iters: int = 500
    allow_noncompliant: bool = False

    @staticmethod
    def formula_tau(gamma, lbar):
        return 2.0 * (1.0 - gamma) / ((1.0 + gamma) * lbar)

    @property
    def tau1_eff(self):
        return self.tau1 if self.tau1 is not None else self.formula_tau(self.gamma1, self.lbar1)

    @property
    def tau2_eff(self):
        return self.tau2 if self.tau2 is not None else self.formula_tau(self.gamma2, self.lbar2)

    @property
    def delta1(self):
        return self.gamma1 * self.lbar1 / (2.0 * (1.0 - self.epsilon - self.gamma1))

    @property
    def delta2(self):
        return self.gamma2 * self.lbar2 / (2.0 * (1.0 - self.epsilon - self.gamma2))

    @property
    def delta_eff(self):
        return self.delta if self.delta is not None else max(self.delta1, self.delta2)

    def validate(self):
        if not 0.0 < self.epsilon < 0.5:
            raise HyperParamsError("epsilon must lie in (0, 1/2)")
        hi = 1.0 - 2.0 * self.epsilon
        for name, g in (("gamma1", self.gamma1), ("gamma2", self.gamma2)):
            if not 0.0 <= g <= hi + 1e-15:
                raise HyperParamsError(f"{name} must lie in [0, 1 - 2 eps] = [0, {hi}]")
        if self.lbar1 <= 0 or self.lbar2 <= 0:
            raise HyperParamsError("lbar1 and lbar2 must be positive")
        for name, t in (("tau1", self.tau1), ("tau2", self.tau2)):
            if t is not None and t <= 0:
                raise HyperParamsError(f"{name} must be positive")
        if not 0.0 < self.omega_bar < 1.0 or not 0.0 < self.nu < 1.0:
            raise HyperParamsError("omega_bar and nu must lie in (0, 1)")
        if self.c1 < 1.0 or self.c2 < 1.0:
            raise HyperParamsError("safeguard constants c1, c2 must be >= 1")
        if self.memory < 1:
            raise HyperParamsError("memory must be a positive integer")
        if self.max_iters < 1:
            raise HyperParamsError("max_iters must be a positive integer")
        if self.delta is not None and self.delta < 0:
            raise HyperParamsError("delta must be nonnegative")

        issues = []
        for name, t, g, lb in (
            ("tau1", self.tau1, self.gamma1, self.lbar1),
            ("tau2", self.tau2, self.gamma2, self.lbar2),
        ):
            if t is not None and t > self.formula_tau(g, lb) * (1.0 + 1e-12):
                issues.append(
                    f"{name}={t:g} exceeds the step-size rule value "
                    f"{self.formula_tau(g, lb):g} for the supplied lbar"
                )
        dmax = max(self.delta1, self.delta2)
        if self.delta is not None and self.delta < dmax * (1.0 - 1e-12):
            issues.append(
                f"delta={self.delta:g} is below max(delta1, delta2)={dmax:g}; "
                "the descent safeguard is weaker than the theory requires"
            )
        if issues:
            if not self.allow_noncompliant:
                raise HyperParamsError(
                    "non-compliant hyperparameters: " + "; ".join(issues)
                )
            for msg in issues:
                warnings.warn(msg, stacklevel=2)
        return issues


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    objective: float
    residual: float
    step_kind: str
    lyapunov: float
    seconds: float


@dataclass
class OptimizerState:
    """Accelerated-loop state on the doubled iterate u = (current, previous).

    ``h_matrix`` is the dense approximate inverse Jacobian of the fixed-point
    residual, ``m_k`` counts the vectors in the current memory window,
    ``s_window`` holds the orthogonalized secant directions, and
    ``cached_sweep`` is the sweep image of the previous accepted iterate
    (reused so each iteration performs only one extra sweep evaluation).
    """

    u: np.ndarray
    h_matrix: np.ndarray
    m_k: int
    s_window: list
    cached_sweep: np.ndarray

    def reset_memory(self):
        self.m_k = 0
        self.s_window = []
        self.h_matrix = np.eye(self.h_matrix.shape[0])


@dataclass
class OptimResult:
    params: ParamVector
    trace: list
    final_objective: float
    accepted_aa: int = 0
    rejected_aa: int = 0
    iterates: list | None = None
    h_norms: list | None = None  # (||H_k||_2, ||H_k^-1||_2) per accelerated iteration


def powell_phi(eta, omega_bar):
    """Powell damping factor keeping the rank-one update nonsingular.

    Returns 1 when |eta| >= omega_bar, else (1 - sign(eta) * omega_bar) /
    (1 - eta), with sign(0) = 1.
    """
    if not 0.0 < omega_bar < 1.0:
        raise ValueError("omega_bar must lie in (0, 1)")
    eta = float(eta)
    if abs(eta) >= omega_bar:
        return 1.0
    sign = 1.0 if eta >= 0.0 else -1.0
    return (1.0 - sign * omega_bar) / (1.0 - eta)


def _as_flat(problem, theta):
    if isinstance(theta, ParamVector):
        return problem.index_map.pack(theta)
    flat = np.asarray(theta, dtype=float)
    if flat.shape != (problem.dim,):
        raise ValueError(f"expected flat vector of dim {problem.dim}")
    return flat.copy()


def _advance(problem, hp, cur, prev, g_ma):
    """One block sweep given the (mu, alpha) gradient at ``cur``; returns new u."""
    im = problem.index_map
    lb, ub = problem.domain.lb_flat(), problem.domain.ub_flat()
    A, B = im.mu_alpha_slice, im.beta_slice
    new = cur.copy()
    new[A] = np.clip(
        cur[A] + hp.tau1_eff * g_ma + hp.gamma1 * (cur[A] - prev[A]), lb[A], ub[A]
    )
    g_b = problem.grad_flat(new, mu_alpha=False, beta=True)[B]
    new[B] = np.clip(
        cur[B] + hp.tau2_eff * g_b + hp.gamma2 * (cur[B] - prev[B]), lb[B], ub[B]
    )
    return np.concatenate([new, cur])


def ipalm_map(problem, hp, u):
    """One sweep of the inertial scheme on the doubled state u = (theta', theta)."""
    u = np.asarray(u, dtype=float)
    P = problem.dim
    if u.shape != (2 * P,):
        raise ValueError(f"expected doubled state of dim {2 * P}")
    cur, prev = u[:P], u[P:]
    g_ma = problem.grad_flat(cur, mu_alpha=True, beta=False)[
        problem.index_map.mu_alpha_slice
    ]
    return _advance(problem, hp, cur, prev, g_ma)


def _block_sq_norms(im, a, b):
    d = a - b
    A, B = im.mu_alpha_slice, im.beta_slice
    return float(d[A] @ d[A]), float(d[B] @ d[B])


def lyapunov_value(problem, hp, theta_k, theta_prev):
    """Descent certificate -obj(theta_k) + (d1/2)||d_ma||^2 + (d2/2)||d_b||^2.

    Nonincreasing along every run whose hyperparameters satisfy the step-size
    and delta relations.
    """
    flat_k = _as_flat(problem, theta_k)
    flat_p = _as_flat(problem, theta_prev)
    sq_ma, sq_b = _block_sq_norms(problem.index_map, flat_k, flat_p)
    obj = problem.objective_flat(flat_k)
    return -obj + 0.5 * hp.delta1 * sq_ma + 0.5 * hp.delta2 * sq_b


def _step_kind(hp):
    return "PALM" if hp.gamma1 == 0.0 and hp.gamma2 == 0.0 else "iPALM"


def run_ipalm(problem, hp, theta0, keep_iterates=False):
    """Iterate the block sweep from theta0; returns params, trace, final objective."""
    hp.validate()
    flat0 = _as_flat(problem, theta0)
    if not problem.domain.contains(flat0):
        raise InfeasibleInitError("initial point lies outside the box domain")
    im = problem.index_map
    P = problem.dim
    kind = _step_kind(hp)
    d1, d2 = hp.delta1, hp.delta2

    u = np.concatenate([flat0, flat0])
    theta_prev = flat0.copy()
    trace = []
    iterates = [flat0.copy()] if keep_iterates else None
    t0 = time.perf_counter()
    for k in range(hp.max_iters):
        cur = u[:P]
        obj_k, grad_full = problem.objective_and_grad_flat(cur)
        sq_ma, sq_b = _block_sq_norms(im, cur, theta_prev)
        lyap = -obj_k + 0.5 * d1 * sq_ma + 0.5 * d2 * sq_b
        u_next = _advance(problem, hp, cur, u[P:], grad_full[im.mu_alpha_slice])
        residual = float(np.linalg.norm(u_next - u))
        trace.append(
            TraceRecord(k, obj_k, residual, kind, lyap, time.perf_counter() - t0)
        )
        theta_prev = cur.copy()
        u = u_next
        if keep_iterates:
            iterates.append(u[:P].copy())

    final = u[:P].copy()
    return OptimResult(
        params=im.unpack(final),
        trace=trace,
        final_objective=problem.objective_flat(final),
        iterates=iterates,
    )


def run_palm(problem, hp, theta0, keep_iterates=False):
    """Non-inertial variant: the block sweep with both momenta forced to zero."""
    return run_ipalm(
        problem, replace(hp, gamma1=0.0, gamma2=0.0), theta0, keep_iterates
    )


def run_aa_ipalm(
    problem,
    hp,
    theta0,
    accept_aa=True,
    keep_iterates=False,
    track_h=False,
):
    """Anderson-accelerated block sweeps with safeguarded acceptance.

    Per iteration the doubled-state secant pair is orthogonalized against the
    current memory window (restarting when the window is full or the
    projection degenerates), the approximate inverse Jacobian H receives a
    Powell-damped rank-one update, and the extrapolated candidate
    u - H (u - sweep(u)) is accepted only if all four safeguard conditions
    hold; otherwise the plain sweep is taken.  ``accept_aa=False`` disables
    the acceleration entirely, reproducing :func:`run_ipalm` bit for bit.
    """
    if not accept_aa:
        return run_ipalm(problem, hp, theta0, keep_iterates)
    hp.validate()
    flat0 = _as_flat(problem, theta0)
    if not problem.domain.contains(flat0):
        raise InfeasibleInitError("initial point lies outside the box domain")
    im = problem.index_map
    P = problem.dim
    d1, d2 = hp.delta1, hp.delta2
    delta = hp.delta_eff
    base_kind = _step_kind(hp)

    u0 = np.concatenate([flat0, flat0])
    trace = []
    iterates = [flat0.copy()] if keep_iterates else None
    h_norms = [] if track_h else None
    t0 = time.perf_counter()

    # Startup sweep: u1 = tilde_u1 = sweep(u0); its record is a plain step.
    obj_0, grad_0 = problem.objective_and_grad_flat(flat0)
    map_u0 = _advance(problem, hp, u0[:P], u0[P:], grad_0[im.mu_alpha_slice])
    trace.append(
        TraceRecord(
            0,
            obj_0,
            float(np.linalg.norm(map_u0 - u0)),
            base_kind,
            -obj_0,
            time.perf_counter() - t0,
        )
    )
    state = OptimizerState(
        u=map_u0.copy(),
        h_matrix=np.eye(2 * P),
        m_k=0,
        s_window=[],
        cached_sweep=map_u0,  # sweep image of u_prev
    )
    u_prev = u0
    u_tilde = map_u0.copy()
    theta_prev = flat0.copy()
    if keep_iterates:
        iterates.append(state.u[:P].copy())
    accepted = rejected = 0

    for k in range(1, hp.max_iters):
        # Secant pair on the doubled state.
        state.m_k += 1
        s = u_tilde - u_prev
        map_u_tilde = ipalm_map(problem, hp, u_tilde)
        y = s - (map_u_tilde - state.cached_sweep)
        s_norm = float(np.linalg.norm(s))

        if s_norm == 0.0 or not np.isfinite(s_norm):
            # Exact fixed point (or degenerate candidate): restart, skip update.
            state.reset_memory()
        else:
            s_hat = s.copy()
            for v in state.s_window:
                s_hat -= (v @ s) / (v @ v) * v
            if state.m_k == hp.memory + 1 or np.linalg.norm(s_hat) < hp.nu * s_norm:
                state.reset_memory()
                s_hat = s.copy()
            else:
                state.s_window.append(s_hat)
            H = state.h_matrix
            sh_sq = float(s_hat @ s_hat)
            eta = float(s_hat @ (H @ y)) / sh_sq if sh_sq > 0 else 0.0
            omega = powell_phi(eta, hp.omega_bar) if np.isfinite(eta) else 1.0
            y_tilde = omega * y - (1.0 - omega) * (u_prev - state.cached_sweep)
            Hyt = H @ y_tilde
            denom = float(s_hat @ Hyt)
            if not np.isfinite(denom) or abs(denom) < 1e-300:
                # Degenerate curvature: forced restart, then retry once with H = I.
                state.reset_memory()
                H = state.h_matrix
                s_hat = s.copy()
                sh_sq = float(s_hat @ s_hat)
                eta = float(s_hat @ y) / sh_sq if sh_sq > 0 else 0.0
                omega = powell_phi(eta, hp.omega_bar) if np.isfinite(eta) else 1.0
                y_tilde = omega * y - (1.0 - omega) * (u_prev - state.cached_sweep)
                Hyt = y_tilde.copy()
                denom = float(s_hat @ Hyt)
            if np.isfinite(denom) and abs(denom) >= 1e-300:
                state.h_matrix = H + np.outer(s - Hyt, H.T @ s_hat) / denom

        if track_h:
            sv = np.linalg.svd(state.h_matrix, compute_uv=False)
            h_norms.append((float(sv[0]), float(1.0 / sv[-1])))

        # Candidates: plain sweep of u, and the accelerated extrapolation.
        u = state.u
        cur = u[:P]
        obj_k, grad_full = problem.objective_and_grad_flat(cur)
        u_hat = _advance(problem, hp, cur, u[P:], grad_full[im.mu_alpha_slice])
        u_tilde_next = u - state.h_matrix @ (u - u_hat)

        res_hat = float(np.linalg.norm(u_hat - u))
        theta_tilde = u_tilde_next[:P]
        take_aa = (
            float(np.linalg.norm(grad_full)) <= hp.c1 * res_hat
            and problem.domain.contains(theta_tilde)
            and float(np.linalg.norm(u_tilde_next[P:] - u[P:]))
            <= hp.c2 * float(np.linalg.norm(u_hat[P:] - u[P:]))
        )
        if take_aa:
            d_theta = theta_tilde - cur
            gain = problem.objective_flat(theta_tilde) - obj_k
            take_aa = gain >= 0.5 * (delta + hp.epsilon * delta) * float(
                d_theta @ d_theta
            )

        sq_ma, sq_b = _block_sq_norms(im, cur, theta_prev)
        lyap = -obj_k + 0.5 * d1 * sq_ma + 0.5 * d2 * sq_b
        trace.append(
            TraceRecord(
                k,
                obj_k,
                res_hat,
                "AA-accepted" if take_aa else "AA-rejected",
                lyap,
                time.perf_counter() - t0,
            )
        )

        accepted += int(take_aa)
        rejected += int(not take_aa)

        theta_prev = cur.copy()
        u_prev = u
        state.cached_sweep = u_hat
        u_tilde = u_tilde_next
        state.u = u_tilde_next if take_aa else u_hat
        if keep_iterates:
            iterates.append(state.u[:P].copy())

    final = state.u[:P].copy()
    return OptimResult(
        params=im.unpack(final),
        trace=trace,
        final_objective=problem.objective_flat(final),
        accepted_aa=accepted,
        rejected_aa=rejected,
        iterates=iterates,
        h_norms=h_norms,
    )


@dataclass(frozen=True)
class ResidualSummary:
    checkpoints: tuple
    min_sq_residuals: tuple
    rate_constants: tuple  # value * K; roughly flat under a 1/K decay


def residual_diagnostics(trace, base_checkpoint=None):
    """Prefix minima of squared step residuals at K0, 2 K0, 4 K0.

    The reported sequence is nonincreasing by construction; the rate
    constants value * K indicate how the decay compares to 1/K.
    """
    if not trace:
        raise ValueError("trace must be nonempty")
    res2 = np.array([r.residual**2 for r in trace], dtype=float)
    prefix_min = np.minimum.accumulate(res2)
    n = len(trace)
    k0 = base_checkpoint if base_checkpoint is not None else max(1, n // 4)
    cps = tuple(min(c, n) for c in (k0, 2 * k0, 4 * k0))
    vals = tuple(float(prefix_min[c - 1]) for c in cps)
    rates = tuple(v * c for v, c in zip(vals, cps))
    return ResidualSummary(cps, vals, rates)


def estimate_lipschitz_bounds(problem, theta0, safety=2.0, iters=20, step=1e-5, seed=0):
    """Estimate block curvature bounds (lbar1, lbar2) at the initial point.

    Power iteration on Hessian-vector products approximated by central finite
    differences of the gradient, restricted to each block, then multiplied by
    a safety factor.  A cheap stand-in for user-supplied bounds.
    """
    flat0 = _as_flat(problem, theta0)
    im = problem.index_map
    rng = np.random.default_rng(seed)

    def block_bound(sl):
        v = np.zeros(problem.dim)
        v[sl] = rng.standard_normal(flat0[sl].size)
        v[sl] /= np.linalg.norm(v[sl])
        lam = 0.0
        for _ in range(iters):
            gp = problem.grad_flat(flat0 + step * v)
            gm = problem.grad_flat(flat0 - step * v)
            hv = (gp - gm) / (2.0 * step)
            lam_new = float(np.linalg.norm(hv[sl]))
            if lam_new == 0.0:
                break
            v = np.zeros(problem.dim)
            v[sl] = hv[sl] / lam_new
            if abs(lam_new - lam) <= 1e-8 * max(1.0, lam_new):
                lam = lam_new
                break
            lam = lam_new
        return safety * max(lam, 1e-12)

    return block_bound(im.mu_alpha_slice), block_bound(im.beta_slice)
