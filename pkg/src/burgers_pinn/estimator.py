"""scikit-learn compatible wrapper around the training loop.

``fit`` needs no data: the benchmark problem supplies the physics, the
initial and boundary values, and the collocation points. ``predict`` maps
space-time points to the solution components. Because all settings are
plain constructor arguments, ``get_params``/``set_params``/``clone`` work
and the estimator drops into sklearn tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import network
from .evaluate import error_norms, report
from .problems import get_problem
from .training import TrainConfig, train


class BurgersPINN(RegressorMixin, BaseEstimator):
    """Physics-informed tanh network for one of the Burgers benchmarks.

    Parameters
    ----------
    problem : str
        Benchmark id, ``"ex1"`` .. ``"ex5"``.
    layers, width : int
        Hidden depth and neurons per hidden layer.
    epochs : int or None
        Adam steps; ``None`` uses 20000 in 1D and 40000 in 2D.
    n_interior, n_initial, n_boundary : int or None
        Collocation, initial and boundary point counts (problem defaults when None).
    reynolds : float or None
        Override of R for ex3, ex4 and ex5.

    Attributes
    ----------
    net_ : Mlp
        Trained network.
    history_ : list of (epoch, LossBreakdown)
    problem_ : ProblemSpec
    """

    def __init__(
        self,
        problem="ex1",
        layers=4,
        width=40,
        epochs=None,
        n_interior=None,
        n_initial=None,
        n_boundary=None,
        seed=42,
        resample=False,
        lambda_ic=10.0,
        lambda_bc=10.0,
        learning_rate=1e-3,
        normalize=True,
        reynolds=None,
        log_every=1,
    ):
        self.problem = problem
        self.layers = layers
        self.width = width
        self.epochs = epochs
        self.n_interior = n_interior
        self.n_initial = n_initial
        self.n_boundary = n_boundary
        self.seed = seed
        self.resample = resample
        self.lambda_ic = lambda_ic
        self.lambda_bc = lambda_bc
        self.learning_rate = learning_rate
        self.normalize = normalize
        self.reynolds = reynolds
        self.log_every = log_every

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            layers=self.layers,
            width=self.width,
            epochs=self.epochs,
            n_interior=self.n_interior,
            n_initial=self.n_initial,
            n_boundary=self.n_boundary,
            seed=self.seed,
            resample=self.resample,
            lambda_ic=self.lambda_ic,
            lambda_bc=self.lambda_bc,
            learning_rate=self.learning_rate,
            normalize=self.normalize,
            log_every=self.log_every,
        )

    def fit(self, X=None, y=None, callback=None):
        """Train on the problem's own collocation data; ``X`` and ``y`` are ignored."""
        self.problem_ = get_problem(self.problem, R=self.reynolds)
        result = train(self.problem_, self._train_config(), callback=callback)
        self.net_ = result.net
        self.history_ = result.history
        self.config_ = result.config
        self.n_features_in_ = self.problem_.n_in
        return self

    def predict(self, X):
        check_is_fitted(self, "net_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        out = network.forward(self.net_, X)
        return out[:, 0] if out.shape[1] == 1 else out

    def exact(self, X):
        """Closed-form solution at ``X``, shaped like :meth:`predict`."""
        problem = getattr(self, "problem_", None) or get_problem(self.problem, R=self.reynolds)
        out = problem.exact(check_array(X, dtype=np.float64))
        return out[:, 0] if out.shape[1] == 1 else out

    def error_norms(self, t, grid_n=None, norm="rms"):
        check_is_fitted(self, "net_")
        return error_norms(self.net_, self.problem_, t, grid_n, norm)

    def error_report(self, times=None, grid_n=None, norm="rms"):
        check_is_fitted(self, "net_")
        times = self.problem_.eval_times if times is None else times
        return report(self.net_, self.problem_, times, grid_n, norm, config=self.get_params())
