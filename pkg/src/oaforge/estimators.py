"""scikit-learn style wrappers: a design builder and a Mallows-kernel GP regressor."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_random_state

from .anneal import AnnealConfig, odd_run_design, run_fsa_kd
from .exceptions import DomainError
from .permutations import check_design
from .surrogate import DEFAULT_NUGGET, gp_fit, gp_predict

__all__ = ["FoldoverKendallDesign", "MallowsGPRegressor"]


def _generator(random_state):
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(random_state, (int, np.integer)):
        return np.random.default_rng(random_state)
    # legacy RandomState: draw a seed from it
    return np.random.default_rng(check_random_state(random_state).randint(2**31))


class FoldoverKendallDesign(BaseEstimator):
    """Maximin Kendall-distance design built by foldover annealing.

    Even ``n_runs`` gives a foldover design; odd ``n_runs`` anneals
    ``n_runs + 1`` runs and drops the weakest one.

    Parameters
    ----------
    m : int
        Number of components.
    n_runs : int
        Design size.
    lam : float
        Weight on ``k_min`` in the annealing objective.
    t0, t_min, alpha, max_iter
        Cooling schedule.
    update : {"incremental", "full"}
        Objective update mode.
    random_state : int, Generator or None

    Attributes
    ----------
    design_ : ndarray of shape (n_runs, m)
    half_ : ndarray
        Representative half of the (parent) foldover design.
    criteria_ : CriteriaSummary
    trace_ : Trace
    n_updates_ : int
    """

    def __init__(self, m=4, n_runs=4, lam=0.5, t0=1.0, t_min=1e-8, alpha=0.997, max_iter=6000, update="incremental", random_state=None):
        self.m = m
        self.n_runs = n_runs
        self.lam = lam
        self.t0 = t0
        self.t_min = t_min
        self.alpha = alpha
        self.max_iter = max_iter
        self.update = update
        self.random_state = random_state

    def fit(self, X=None, y=None):
        """Construct the design; ``X`` and ``y`` are ignored."""
        config = AnnealConfig(
            m=self.m,
            n=self.n_runs,
            t0=self.t0,
            t_min=self.t_min,
            alpha=self.alpha,
            max_iter=self.max_iter,
            lam=self.lam,
        )
        if self.n_runs < 3:
            raise DomainError(f"n_runs must be at least 3, got {self.n_runs}")
        build = run_fsa_kd if self.n_runs % 2 == 0 else odd_run_design
        result = build(config, _generator(self.random_state), update=self.update)
        self.design_ = result.design
        self.half_ = result.half
        self.criteria_ = result.summary
        self.trace_ = result.trace
        self.n_updates_ = result.n_updates
        return self

    def transform(self, X=None):
        check_is_fitted(self, "design_")
        return self.design_.copy()

    def fit_transform(self, X=None, y=None):
        return self.fit(X, y).transform()


class MallowsGPRegressor(RegressorMixin, BaseEstimator):
    """Constant-mean GP on permutations with kernel ``exp(-theta * k(x, y))``.

    Parameters
    ----------
    theta_grid : array-like, optional
        Candidate ``theta`` values; defaults to 25 log-spaced points on
        ``[1e-3, 10]``.
    nugget : float
        Initial diagonal jitter.

    Attributes
    ----------
    theta_, mu_, sigma2_ : float
        Selected kernel parameter, GLS mean and profile variance.
    model_ : GpModel
    """

    def __init__(self, theta_grid=None, nugget=DEFAULT_NUGGET):
        self.theta_grid = theta_grid
        self.nugget = nugget

    def fit(self, X, y):
        X = check_design(X, min_runs=2, require_distinct=True)
        self.model_ = gp_fit(X, y, theta_grid=self.theta_grid, nugget=self.nugget)
        self.theta_ = self.model_.params.theta
        self.mu_ = self.model_.mu
        self.sigma2_ = self.model_.sigma2
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X, return_std=False):
        check_is_fitted(self, "model_")
        X = check_design(X, m=self.n_features_in_)
        mean, var = gp_predict(self.model_, X)
        if return_std:
            return mean, np.sqrt(var)
        return mean
