"""Parameter and kernel model for multivariate Hawkes processes.

A K-type process is parameterized by theta = (mu, alpha, beta):

* ``mu``    -- length-K baseline rates (events per unit time), all positive;
* ``alpha`` -- M x K x K nonnegative excitation weights, ``alpha[m, i, j]``
  scaling how much a type-j event raises the type-i intensity through base
  kernel m;
* ``beta``  -- length-M kernel shape parameters (one scalar per base kernel).

The triggering function is ``g_ij(t) = sum_m alpha[m, i, j] * phi_m(t; beta_m)``
with ``phi_m`` drawn from the shipped kernel families below.  The feasible set
is a compact box, Cartesian in the (mu, alpha) block and the beta block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "NonStationaryError",
    "Exponential",
    "PowerLawCutoff",
    "ModelSpec",
    "ParamVector",
    "BoxDomain",
    "FlatIndexMap",
    "kernel_value",
    "kernel_antiderivative",
    "kernel_dbeta",
    "kernel_antideriv_dbeta",
    "branching_matrix",
    "spectral_radius",
    "stationary_mean_intensity",
    "project_onto_box",
]


class DomainError(ValueError):
    """Inadmissible parameter for a kernel family or box domain."""


class NonStationaryError(DomainError):
    """Branching matrix has spectral radius >= 1."""

    def __init__(self, radius):
        self.radius = float(radius)
        super().__init__(
            f"non-stationary parameters: spectral radius {self.radius:.6g} >= 1"
        )


@dataclass(frozen=True)
class Exponential:
    """Exponential decay kernel phi(t; beta) = exp(-beta t), beta > 0."""

    name = "exponential"

    def validate_beta(self, beta):
        if not beta > 0:
            raise DomainError(f"exponential kernel requires beta > 0, got {beta}")

    def value(self, t, beta):
        return np.exp(-beta * t)

    def antiderivative(self, u, beta):
        # (1 - exp(-beta u)) / beta, via expm1 for small exponents.
        if beta == 0.0:
            return u * np.ones_like(np.asarray(u, dtype=float))
        return -np.expm1(-beta * u) / beta

    def dbeta(self, t, beta):
        return -t * np.exp(-beta * t)

    def antideriv_dbeta(self, u, beta):
        # d/dbeta [(1 - e^{-beta u})/beta] = (e^{-beta u}(1 + beta u) - 1)/beta^2,
        # with a series branch where beta*u is small enough to cancel badly.
        u = np.asarray(u, dtype=float)
        if beta == 0.0:
            return -0.5 * u * u
        x = beta * u
        with np.errstate(over="ignore", invalid="ignore"):
            exact = (np.exp(-x) * (1.0 + x) - 1.0) / beta**2
        series = u * u * (-0.5 + x / 3.0 - x * x / 8.0)
        return np.where(np.abs(x) < 1e-3, series, exact)

    def total_mass(self, beta):
        self.validate_beta(beta)
        return 1.0 / beta

    def inverse_antiderivative(self, y, beta):
        # u with antiderivative(u) = y; y in [0, 1/beta).
        return -np.log1p(-beta * y) / beta


@dataclass(frozen=True)
class PowerLawCutoff:
    """Power-law kernel phi(t; beta) = (t + c)^(-beta) with cutoff c > 0.

    Integrability over [0, inf) requires beta > 1.
    """

    c: float
    name = "powerlaw"

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"power-law cutoff must be positive, got {self.c}")

    def validate_beta(self, beta):
        if not beta > 1:
            raise DomainError(f"power-law kernel requires beta > 1, got {beta}")

    def value(self, t, beta):
        return np.power(t + self.c, -beta)

    def antiderivative(self, u, beta):
        c = self.c
        if beta == 1.0:
            return np.log1p(np.asarray(u, dtype=float) / c)
        return (c ** (1.0 - beta) - np.power(u + c, 1.0 - beta)) / (beta - 1.0)

    def dbeta(self, t, beta):
        tc = t + self.c
        return -np.log(tc) * np.power(tc, -beta)

    def antideriv_dbeta(self, u, beta):
        # Differentiate (c^{1-b} - (u+c)^{1-b})/(b-1) in b analytically.
        c = self.c
        if beta == 1.0:
            # Limit of the quotient-rule expression as beta -> 1.
            lc, lu = np.log(c), np.log(u + c)
            return 0.5 * (lc * lc - lu * lu)
        a = c ** (1.0 - beta)
        b = np.power(u + c, 1.0 - beta)
        da = -np.log(c) * a
        db = -np.log(u + c) * b
        return ((da - db) * (beta - 1.0) - (a - b)) / (beta - 1.0) ** 2

    def total_mass(self, beta):
        self.validate_beta(beta)
        return self.c ** (1.0 - beta) / (beta - 1.0)

    def inverse_antiderivative(self, y, beta):
        # u with antiderivative(u) = y; y in [0, total_mass).
        c = self.c
        q = c ** (1.0 - beta) - (beta - 1.0) * np.asarray(y, dtype=float)
        return np.power(q, 1.0 / (1.0 - beta)) - c


def kernel_value(family, t, beta):
    """Evaluate phi(t; beta) >= 0 for t >= 0 and admissible beta."""
    family.validate_beta(beta)
    if np.any(np.asarray(t) < 0):
        raise ValueError("kernel argument t must be nonnegative")
    return family.value(t, beta)


def kernel_antiderivative(family, u, beta):
    """Evaluate Phi(u; beta) = integral of phi over [0, u] in closed form."""
    family.validate_beta(beta)
    if np.any(np.asarray(u) < 0):
        raise ValueError("kernel argument u must be nonnegative")
    return family.antiderivative(u, beta)


def kernel_dbeta(family, t, beta):
    """Exact partial derivative of phi(t; beta) with respect to beta."""
    family.validate_beta(beta)
    return family.dbeta(t, beta)


def kernel_antideriv_dbeta(family, u, beta):
    """Exact partial derivative of Phi(u; beta) with respect to beta."""
    family.validate_beta(beta)
    return family.antideriv_dbeta(u, beta)


@dataclass(frozen=True)
class ModelSpec:
    """Number of event types K, number of base kernels M, and the kernels."""

    K: int
    M: int
    kernels: tuple

    def __post_init__(self):
        if self.K < 1 or self.M < 1:
            raise ValueError("K and M must be positive")
        object.__setattr__(self, "kernels", tuple(self.kernels))
        if len(self.kernels) != self.M:
            raise ValueError(f"expected {self.M} kernels, got {len(self.kernels)}")

    @property
    def dim(self):
        return self.K + self.M * self.K**2 + self.M

    @property
    def index_map(self):
        return FlatIndexMap(self.K, self.M)


@dataclass(frozen=True)
class FlatIndexMap:
    """Layout of theta as one flat vector: [mu | alpha (m,i,j) C-order | beta].

    The (mu, alpha) block is contiguous because the optimizer updates it
    jointly; beta occupies the trailing M coordinates.
    """

    K: int
    M: int

    @property
    def dim(self):
        return self.K + self.M * self.K**2 + self.M

    @property
    def mu_slice(self):
        return slice(0, self.K)

    @property
    def alpha_slice(self):
        return slice(self.K, self.K + self.M * self.K**2)

    @property
    def beta_slice(self):
        return slice(self.K + self.M * self.K**2, self.dim)

    @property
    def mu_alpha_slice(self):
        return slice(0, self.K + self.M * self.K**2)

    def pack(self, params):
        return np.concatenate(
            [params.mu, params.alpha.reshape(-1), params.beta]
        ).astype(float)

    def unpack(self, flat):
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.dim,):
            raise ValueError(f"expected flat vector of dim {self.dim}, got {flat.shape}")
        K, M = self.K, self.M
        return ParamVector(
            mu=flat[self.mu_slice].copy(),
            alpha=flat[self.alpha_slice].reshape(M, K, K).copy(),
            beta=flat[self.beta_slice].copy(),
        )


@dataclass
class ParamVector:
    """theta = (mu, alpha, beta); see module docstring for shapes."""

    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        if self.mu.ndim != 1 or self.alpha.ndim != 3 or self.beta.ndim != 1:
            raise ValueError("mu must be 1-d, alpha 3-d, beta 1-d")
        K = self.mu.shape[0]
        M = self.beta.shape[0]
        if self.alpha.shape != (M, K, K):
            raise ValueError(
                f"alpha shape {self.alpha.shape} inconsistent with K={K}, M={M}"
            )

    @property
    def K(self):
        return self.mu.shape[0]

    @property
    def M(self):
        return self.beta.shape[0]

    def copy(self):
        return ParamVector(self.mu.copy(), self.alpha.copy(), self.beta.copy())

    def validate(self, spec):
        """Admissibility: positive baselines, nonnegative weights, kernel beta."""
        if (self.K, self.M) != (spec.K, spec.M):
            raise ValueError("parameter shapes do not match the model spec")
        if np.any(self.mu <= 0):
            raise DomainError("baseline rates mu must be positive")
        if np.any(self.alpha < 0):
            raise DomainError("excitation weights alpha must be nonnegative")
        for m, kern in enumerate(spec.kernels):
            kern.validate_beta(float(self.beta[m]))


@dataclass
class BoxDomain:
    """Compact box [lb, ub] per coordinate, Cartesian in (mu, alpha) and beta."""

    mu_lb: np.ndarray
    mu_ub: np.ndarray
    alpha_lb: np.ndarray
    alpha_ub: np.ndarray
    beta_lb: np.ndarray
    beta_ub: np.ndarray

    def __post_init__(self):
        for name in ("mu_lb", "mu_ub", "alpha_lb", "alpha_ub", "beta_lb", "beta_ub"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.alpha_lb.ndim != 3:
            raise ValueError("alpha bounds must be M x K x K arrays")
        if (
            np.any(self.mu_lb > self.mu_ub)
            or np.any(self.alpha_lb > self.alpha_ub)
            or np.any(self.beta_lb > self.beta_ub)
        ):
            raise DomainError("box lower bounds must not exceed upper bounds")
        if np.any(self.mu_lb <= 0):
            raise DomainError("mu lower bounds must be positive")
        if np.any(self.alpha_lb < 0):
            raise DomainError("alpha lower bounds must be nonnegative")

    def validate_kernels(self, spec):
        for m, kern in enumerate(spec.kernels):
            kern.validate_beta(float(self.beta_lb[m]))

    @property
    def K(self):
        return self.mu_lb.shape[0]

    @property
    def M(self):
        return self.beta_lb.shape[0]

    @property
    def index_map(self):
        return FlatIndexMap(self.K, self.M)

    def lb_flat(self):
        return np.concatenate([self.mu_lb, self.alpha_lb.reshape(-1), self.beta_lb])

    def ub_flat(self):
        return np.concatenate([self.mu_ub, self.alpha_ub.reshape(-1), self.beta_ub])

    def contains(self, flat, atol=0.0):
        flat = np.asarray(flat, dtype=float)
        return bool(
            np.all(flat >= self.lb_flat() - atol)
            and np.all(flat <= self.ub_flat() + atol)
        )

    def project(self, flat):
        return project_onto_box(self, flat)


def project_onto_box(domain, flat):
    """Componentwise clamp of a flat vector to the box; idempotent."""
    flat = np.asarray(flat, dtype=float)
    lb, ub = domain.lb_flat(), domain.ub_flat()
    if flat.shape != lb.shape:
        raise ValueError(f"expected flat vector of dim {lb.shape[0]}, got {flat.shape}")
    return np.clip(flat, lb, ub)


def branching_matrix(spec, params):
    """G[i, j] = sum_m alpha[m, i, j] * Phi_m(inf; beta_m), the mean offspring counts."""
    params.validate(spec)
    K = spec.K
    G = np.zeros((K, K))
    for m, kern in enumerate(spec.kernels):
        G += params.alpha[m] * kern.total_mass(float(params.beta[m]))
    return G


def spectral_radius(G, tol=1e-10, max_iters=10000):
    """Largest eigenvalue modulus of a nonnegative square matrix.

    Power iteration on G + I: the shift makes the (real, nonnegative) Perron
    root strictly dominant, so the iteration converges even for periodic
    matrices such as [[0, 1], [1, 0]].
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError("G must be square")
    if np.any(G < 0):
        raise ValueError("G must be nonnegative")
    n = G.shape[0]
    if n == 0 or not np.any(G):
        return 0.0
    x = np.full(n, 1.0 / np.sqrt(n))
    lam = 1.0
    for _ in range(max_iters):
        y = G @ x + x
        y_norm = float(np.linalg.norm(y))
        x = y / y_norm
        lam = float(x @ (G @ x + x))
        if np.linalg.norm(G @ x + x - lam * x) <= tol:
            break
    return max(lam - 1.0, 0.0)


def stationary_mean_intensity(spec, params):
    """Stationary mean rates: solve (I - G) lambda_bar = mu.

    Requires spectral radius of G below one; the solution is then positive.
    """
    G = branching_matrix(spec, params)
    radius = spectral_radius(G)
    if radius >= 1.0:
        raise NonStationaryError(radius)
    lam_bar = np.linalg.solve(np.eye(spec.K) - G, params.mu)
    return lam_bar
