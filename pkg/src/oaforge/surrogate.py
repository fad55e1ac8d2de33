"""Gaussian-process surrogate over permutations with the Mallows kernel.

The kernel is ``exp(-theta * k(x, y))`` with ``k`` the Kendall distance.  The
constant mean and process variance are profiled out in closed form and
``theta`` is chosen on a logarithmic grid by profile likelihood.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .exceptions import ConditioningError, DomainError
from .permutations import check_design, check_permutation, kendall_distance, pwo_matrix

log = logging.getLogger(__name__)

__all__ = [
    "MallowsKernelParams",
    "GpModel",
    "DEFAULT_THETA_GRID",
    "mallows_kernel",
    "kernel_matrix",
    "log_det",
    "gp_fit",
    "gp_predict",
    "expected_improvement",
    "ei_from_moments",
]

DEFAULT_THETA_GRID = np.logspace(-3, 1, 25)
DEFAULT_NUGGET = 1e-8
MAX_NUGGET = 1e-4


@dataclass(frozen=True)
class MallowsKernelParams:
    theta: float
    nugget: float = DEFAULT_NUGGET

    def __post_init__(self):
        if self.theta < 0:
            raise DomainError(f"theta must be nonnegative, got {self.theta}")
        if self.nugget < 0:
            raise DomainError(f"nugget must be nonnegative, got {self.nugget}")


@dataclass
class GpModel:
    """Fitted constant-mean GP.  ``alpha`` holds ``Sigma^-1 (y - mu)``."""

    inputs: np.ndarray
    outputs: np.ndarray
    mu: float
    sigma2: float
    params: MallowsKernelParams
    chol: np.ndarray
    alpha: np.ndarray
    log_likelihood: float

    def __post_init__(self):
        self._z = pwo_matrix(self.inputs)

    def distances_to(self, x):
        """Kendall distances from each row of ``x`` to the training inputs."""
        z = pwo_matrix(np.atleast_2d(x))
        return (self._z.shape[1] - z @ self._z.T) // 2


def mallows_kernel(x, y, theta):
    """``exp(-theta * k(x, y))``."""
    if theta < 0:
        raise DomainError(f"theta must be nonnegative, got {theta}")
    return float(np.exp(-theta * kendall_distance(x, y)))


def _distances(design):
    z = pwo_matrix(design)
    return (z.shape[1] - z @ z.T) // 2


def _correlation(dist, params):
    k = np.exp(-params.theta * dist)
    k[np.diag_indices_from(k)] += params.nugget
    return k


def kernel_matrix(design, params):
    """Kernel matrix of a design, nugget added to the diagonal."""
    design = check_design(design)
    return _correlation(_distances(design), params)


def _cholesky(k):
    try:
        return linalg.cholesky(k, lower=True)
    except linalg.LinAlgError as exc:
        raise ConditioningError(f"kernel matrix is not positive definite: {exc}") from None


def log_det(design, params):
    """Log-determinant of the kernel matrix via its Cholesky factor."""
    chol = _cholesky(kernel_matrix(design, params))
    return float(2.0 * np.log(np.diag(chol)).sum())


def _profile(dist, y, params):
    """Closed-form GLS mean, profile variance and profile log-likelihood at one ``theta``."""
    chol = _cholesky(_correlation(dist, params))
    n = y.size
    ones = np.ones(n)
    k_inv_one = linalg.cho_solve((chol, True), ones)
    k_inv_y = linalg.cho_solve((chol, True), y)
    mu = float(ones @ k_inv_y / (ones @ k_inv_one))
    resid = y - mu
    alpha = linalg.cho_solve((chol, True), resid)
    sigma2 = float(resid @ alpha / n)
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    loglik = -0.5 * n * np.log(max(sigma2, np.finfo(float).tiny)) - 0.5 * logdet
    return mu, sigma2, chol, alpha, float(loglik)


def gp_fit(inputs, outputs, theta_grid=None, nugget=DEFAULT_NUGGET, max_nugget=MAX_NUGGET):
    """Fit the Mallows-kernel GP by profile likelihood over ``theta_grid``.

    At each ``theta`` the nugget starts at ``nugget`` and grows tenfold (from
    ``1e-8`` if it starts at zero), up to ``max_nugget``, until the kernel
    matrix factorizes.

    Raises
    ------
    ConditioningError
        If no grid point yields a factorizable kernel matrix.
    """
    inputs = check_design(inputs, min_runs=2, require_distinct=True)
    y = np.asarray(outputs, dtype=float).ravel()
    if y.size != inputs.shape[0]:
        raise DomainError(f"{inputs.shape[0]} inputs but {y.size} outputs")
    grid = DEFAULT_THETA_GRID if theta_grid is None else np.atleast_1d(np.asarray(theta_grid, dtype=float))
    dist = _distances(inputs)
    best = None
    for theta in grid:
        eps = nugget
        while True:
            params = MallowsKernelParams(float(theta), eps)
            try:
                fit = _profile(dist, y, params)
            except ConditioningError:
                step = eps * 10 if eps > 0 else DEFAULT_NUGGET
                if step > max_nugget * (1 + 1e-12):
                    log.debug("theta=%g: kernel not factorizable up to nugget %g", theta, eps)
                    fit = None
                    break
                eps = step
                continue
            break
        if fit is not None and (best is None or fit[-1] > best[1][-1]):
            best = (params, fit)
    if best is None:
        raise ConditioningError("kernel matrix not factorizable for any theta in the grid")
    params, (mu, sigma2, chol, alpha, loglik) = best
    return GpModel(inputs, y, mu, sigma2, params, chol, alpha, loglik)


def gp_predict(model, x_new):
    """Posterior mean and variance at one permutation or a stack of them.

    Returns scalars for a single permutation, arrays otherwise.
    """
    m = model.inputs.shape[1]
    single = np.ndim(x_new) == 1
    x = check_permutation(x_new, m)[None, :] if single else check_design(x_new, m)
    kvec = np.exp(-model.params.theta * model.distances_to(x))
    mean = model.mu + kvec @ model.alpha
    v = linalg.solve_triangular(model.chol, kvec.T, lower=True)
    var = np.maximum(model.sigma2 * (1.0 - (v * v).sum(axis=0)), 0.0)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var


def expected_improvement(model, x, best_y):
    """Expected reduction below ``best_y`` (minimization) at ``x``."""
    mean, var = gp_predict(model, x)
    ei = ei_from_moments(mean, np.sqrt(var), best_y)
    return float(ei[0]) if np.ndim(mean) == 0 else ei


def ei_from_moments(mean, sd, best_y):
    """Closed-form EI for posterior means ``mean`` and standard deviations ``sd``."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    sd = np.atleast_1d(np.asarray(sd, dtype=float))
    gap = best_y - mean
    out = np.maximum(gap, 0.0)
    pos = sd > 0
    zs = gap[pos] / sd[pos]
    out[pos] = gap[pos] * special.ndtr(zs) + sd[pos] * np.exp(-0.5 * zs * zs) / np.sqrt(2 * np.pi)
    return np.maximum(out, 0.0)
