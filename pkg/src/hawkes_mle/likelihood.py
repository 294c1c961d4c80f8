"""Log-likelihood of an observed event stream and its analytic gradient.

For arrival times t_s^j of type j on [0, T] and intensity

    lam_i(t) = mu_i + sum_j sum_m alpha[m,i,j] * sum_{s < t, type j} phi_m(t - s)

the log-likelihood in closed form is

    L(theta) = -T * sum_i mu_i
               - sum_{i,j,m} alpha[m,i,j] * sum_{s: type j} Phi_m(T - s)
               + sum_i sum_{t: type i} log lam_i(t),

with Phi_m the kernel antiderivative.  Inner sums are strict (s < t):
simultaneous arrivals do not excite each other at the shared instant.  The
regularized objective subtracts a Tikhonov penalty C * ||theta||_2^2 over all
coordinates including beta.

Evaluation is by direct pairwise summation (O(n^2) memory and time), exact at
desk scale; an optional truncation horizon drops contributions with
t - s > truncation.  All functions here are pure; a ``LikelihoodProblem`` is
immutable after construction and safe to share across threads.  Sums are
reduced in fixed order, so objective values reproduce bit for bit.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "LikelihoodProblem",
    "intensity_at",
    "log_likelihood",
    "grad_log_likelihood",
    "regularized_objective",
    "grad_regularized",
]


class LikelihoodProblem:
    """Event stream + model spec + box domain + Tikhonov coefficient.

    Precomputes the pairwise elapsed-time matrix and per-type indicator used
    by every objective/gradient evaluation.
    """

    def __init__(self, spec, events, domain, reg_c=0.0, truncation=None):
        if events.horizon <= 0:
            raise ValueError("observation horizon T must be positive")
        if reg_c < 0:
            raise ValueError("regularization coefficient must be nonnegative")
        if np.any(events.types >= spec.K):
            raise ValueError("event type index out of range for the model spec")
        domain.validate_kernels(spec)
        self.spec = spec
        self.events = events
        self.domain = domain
        self.reg_c = float(reg_c)
        self.truncation = None if truncation is None else float(truncation)
        self.T = float(events.horizon)
        self.index_map = spec.index_map
        self.dim = self.index_map.dim

        times = events.times
        types = events.types
        n, K = times.size, spec.K
        self.n = n
        self._types = types
        # Z[a, k] = 1 if event a has type k.
        Z = np.zeros((n, K))
        if n:
            Z[np.arange(n), types] = 1.0
        self._Z = Z
        # dt[a, b] = t_a - t_b where t_b < t_a (strict); invalid entries get a
        # harmless positive placeholder and are masked out of every sum.
        dt = times[:, None] - times[None, :]
        valid = dt > 0
        if truncation is not None:
            valid &= dt <= float(truncation)
        self._dt = np.where(valid, dt, 1.0)
        self._valid = valid
        self._comp_dt = self.T - times  # elapsed time entering the compensator

    # -- internal fused evaluation ------------------------------------------

    def _evaluate(self, flat, want_obj, want_grad_ma, want_grad_beta):
        """Objective and/or gradient blocks of the regularized log-likelihood.

        Gradient blocks are formula evaluations valid on an open superset of
        the box; the objective requires positive intensities at every event
        and raises if that invariant is violated (impossible inside the box).
        """
        spec, im = self.spec, self.index_map
        K, M = spec.K, spec.M
        mu = flat[im.mu_slice]
        alpha = flat[im.alpha_slice].reshape(M, K, K)
        beta = flat[im.beta_slice]
        n = self.n
        types = self._types
        Z = self._Z

        # Per-kernel building blocks.
        R = []       # R[m][a, j] = sum_{s < t_a, type j} phi_m(t_a - s)
        S = []       # S[m][j]    = sum_{s: type j} Phi_m(T - s)
        # Extrapolated candidates can land far outside the box where kernel
        # values overflow; the resulting non-finite gradients are rejected by
        # the optimizer's safeguard, so the noise is silenced here.
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            for m in range(M):
                kern = spec.kernels[m]
                b = float(beta[m])
                E = np.where(self._valid, kern.value(self._dt, b), 0.0)
                R.append(E @ Z)
                S.append(Z.T @ kern.antiderivative(self._comp_dt, b))
            lam = mu[types].copy() if n else np.empty(0)
            for m in range(M):
                lam += np.einsum("aj,aj->a", alpha[m][types], R[m])

        obj = None
        if want_obj:
            if n and not np.all(lam > 0):
                raise RuntimeError(
                    "internal invariant violated: nonpositive intensity at an event"
                )
            comp = sum(alpha[m].sum(axis=0) @ S[m] for m in range(M))
            logterm = float(np.log(lam).sum()) if n else 0.0
            obj = float(-self.T * mu.sum() - comp + logterm)
            obj -= self.reg_c * float(flat @ flat)

        grad = None
        if want_grad_ma or want_grad_beta:
            grad = np.zeros(self.dim)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                inv_lam = 1.0 / lam if n else np.empty(0)
                if want_grad_ma:
                    g_mu = np.bincount(types, weights=inv_lam, minlength=K) - self.T
                    grad[im.mu_slice] = g_mu
                    g_alpha = np.empty((M, K, K))
                    for m in range(M):
                        g_alpha[m] = Z.T @ (R[m] * inv_lam[:, None]) - S[m][None, :]
                    grad[im.alpha_slice] = g_alpha.reshape(-1)
                if want_grad_beta:
                    g_beta = np.empty(M)
                    for m in range(M):
                        kern = spec.kernels[m]
                        b = float(beta[m])
                        Sd = Z.T @ kern.antideriv_dbeta(self._comp_dt, b)
                        D = np.where(self._valid, kern.dbeta(self._dt, b), 0.0) @ Z
                        excite = np.einsum("aj,aj,a->", alpha[m][types], D, inv_lam)
                        g_beta[m] = -(alpha[m].sum(axis=0) @ Sd) + excite
                    grad[im.beta_slice] = g_beta
            if want_grad_ma:
                grad[im.mu_alpha_slice] -= 2.0 * self.reg_c * flat[im.mu_alpha_slice]
            if want_grad_beta:
                grad[im.beta_slice] -= 2.0 * self.reg_c * flat[im.beta_slice]

        return obj, grad

    def objective_flat(self, flat):
        obj, _ = self._evaluate(np.asarray(flat, float), True, False, False)
        return obj

    def grad_flat(self, flat, mu_alpha=True, beta=True):
        _, grad = self._evaluate(np.asarray(flat, float), False, mu_alpha, beta)
        return grad

    def objective_and_grad_flat(self, flat):
        return self._evaluate(np.asarray(flat, float), True, True, True)


def intensity_at(problem, params, t, i):
    """Intensity of type i at time t, summing strictly earlier events."""
    t = float(t)
    if t < 0 or t > problem.T:
        raise ValueError(f"t={t} outside the observation window [0, {problem.T}]")
    if not 0 <= i < problem.spec.K:
        raise ValueError(f"type index {i} out of range")
    times, types = problem.events.times, problem.events.types
    mask = times < t
    if problem.truncation is not None:
        mask &= (t - times) <= problem.truncation
    lam = float(params.mu[i])
    if np.any(mask):
        dt = t - times[mask]
        src = types[mask]
        for m, kern in enumerate(problem.spec.kernels):
            phi = kern.value(dt, float(params.beta[m]))
            per_src = np.bincount(src, weights=phi, minlength=problem.spec.K)
            lam += float(params.alpha[m, i] @ per_src)
    return lam


def log_likelihood(problem, params):
    """Closed-form log-likelihood (no penalty)."""
    flat = problem.index_map.pack(params)
    obj, _ = problem._evaluate(flat, True, False, False)
    return obj + problem.reg_c * float(flat @ flat)


def grad_log_likelihood(problem, params):
    """Analytic gradient of the log-likelihood as a flat vector of dim P."""
    flat = problem.index_map.pack(params)
    grad = problem.grad_flat(flat)
    return grad + 2.0 * problem.reg_c * flat


def regularized_objective(problem, params):
    """Log-likelihood minus the Tikhonov penalty C * ||theta||^2."""
    return problem.objective_flat(problem.index_map.pack(params))


def grad_regularized(problem, params):
    """Gradient of the regularized objective (subtracts 2 C theta)."""
    return problem.grad_flat(problem.index_map.pack(params))
