"""Shared builders for test instances."""

import numpy as np

from hawkes_mle import (
    BoxDomain,
    EventSequence,
    Exponential,
    LikelihoodProblem,
    ModelSpec,
    ParamVector,
    PowerLawCutoff,
)


def exp_spec(K=1, M=1):
    return ModelSpec(K=K, M=M, kernels=[Exponential()] * M)


def pwl_spec(K=1, M=1, c=0.05):
    return ModelSpec(K=K, M=M, kernels=[PowerLawCutoff(c)] * M)


def wide_domain(spec, mu_hi=100.0, alpha_hi=100.0, beta_lo=None, beta_hi=100.0):
    K, M = spec.K, spec.M
    if beta_lo is None:
        beta_lo = [1.2 if k.name == "powerlaw" else 1e-3 for k in spec.kernels]
    return BoxDomain(
        mu_lb=np.full(K, 1e-4),
        mu_ub=np.full(K, mu_hi),
        alpha_lb=np.zeros((M, K, K)),
        alpha_ub=np.full((M, K, K), alpha_hi),
        beta_lb=np.asarray(beta_lo, dtype=float),
        beta_ub=np.full(M, beta_hi),
    )


def params(mu, alpha, beta):
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim == 0:
        alpha = alpha.reshape(1, 1, 1)
    elif alpha.ndim == 2:
        alpha = alpha[None, :, :]
    return ParamVector(mu=mu, alpha=alpha, beta=beta)


def events(times, types=None, horizon=None):
    times = np.asarray(times, dtype=float)
    if types is None:
        types = np.zeros(times.size, dtype=np.int64)
    if horizon is None:
        horizon = float(times[-1]) if times.size else 1.0
    return EventSequence(times=times, types=np.asarray(types), horizon=horizon)


def problem(spec, ev, reg_c=0.0, domain=None):
    return LikelihoodProblem(spec, ev, domain or wide_domain(spec), reg_c=reg_c)


def random_interior(domain, rng, margin=1e-3):
    """A point strictly inside the box, uniform in each coordinate."""
    lb, ub = domain.lb_flat(), domain.ub_flat()
    width = ub - lb
    lo = lb + margin * width
    hi = ub - margin * width
    return lo + rng.uniform(size=lb.size) * (hi - lo)


def loglik_quadrature(prob, pv, epsabs=1e-9):
    """Independent oracle: numerically integrate the intensity-form log-likelihood.

    Sums -integral(lam_i) + sum log lam_i(t_k) with the integral evaluated by
    adaptive quadrature on each inter-event segment (the intensity is smooth
    between arrivals).
    """
    from scipy.integrate import quad

    from hawkes_mle import intensity_at

    knots = np.concatenate([[0.0], prob.events.times, [prob.T]])
    knots = np.unique(knots)
    total = 0.0
    for i in range(prob.spec.K):
        integral = 0.0
        for a, b in zip(knots[:-1], knots[1:]):
            if b > a:
                val, _ = quad(
                    lambda t: intensity_at(prob, pv, t, i),
                    a,
                    b,
                    epsabs=epsabs,
                    epsrel=1e-10,
                    limit=200,
                )
                integral += val
        total -= integral
        for t, k in zip(prob.events.times, prob.events.types):
            if k == i:
                total += np.log(intensity_at(prob, pv, t, i))
    return total


def compliant_global_bounds(prob, safety_ma=2.0, safety_b=5.0, n_samples=12, seed=0):
    """Curvature bounds that hold over the whole box, not just one point.

    The (mu, alpha)-block Hessian entries are sums of outer products weighted
    by 1/intensity^2, so for exponential kernels the block is elementwise
    maximal at the corner (mu_lb, alpha_lb, beta_lb): smallest intensities,
    slowest decay.  The beta-block curvature is not monotone, so both bounds
    also take the max over sampled box points and adversarial edges, then get
    a safety factor.
    """
    from hawkes_mle import estimate_lipschitz_bounds

    im = prob.index_map
    lb, ub = prob.domain.lb_flat(), prob.domain.ub_flat()
    pts = [lb.copy()]
    rng = np.random.default_rng(seed)
    for _ in range(n_samples):
        pts.append(lb + rng.uniform(size=lb.size) * (ub - lb))
    for f in (0.0, 0.5, 1.0):
        x = lb.copy()
        x[im.alpha_slice] = ub[im.alpha_slice]
        x[im.beta_slice] = lb[im.beta_slice] + f * (ub[im.beta_slice] - lb[im.beta_slice])
        pts.append(x)
    l1s, l2s = zip(*(estimate_lipschitz_bounds(prob, p, safety=1.0) for p in pts))
    return safety_ma * max(l1s), safety_b * max(l2s)


def fd_gradient(prob, flat, h=1e-6):
    """Central finite differences of the regularized objective."""
    flat = np.asarray(flat, dtype=float)
    g = np.empty_like(flat)
    for i in range(flat.size):
        up, dn = flat.copy(), flat.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (prob.objective_flat(up) - prob.objective_flat(dn)) / (2.0 * h)
    return g
