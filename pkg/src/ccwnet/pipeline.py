"""Step-two orchestration: grid search, the weighted and unweighted fits,
and the evaluation metrics.

The weighted estimator trains the MLP on the inverse-probability-weighted
objective with (w1-hat, w0-hat) from step one; the unweighted baseline runs
the identical pipeline with weights (1, 1), so the weighting is the only
difference between the two.  Model selection picks the grid cell with the
highest validation accuracy, breaking ties by smaller parameter size, then
smaller depth.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .data import CaseControlSample, Dataset
from .dgp import GFunction
from .errors import DegenerateTruthError, DivergenceError, DomainError
from .mlp import Architecture, Network, TrainConfig, forward_batch, init_network, train
from .seeding import derive_seed

__all__ = [
    "GridSpec",
    "FitResult",
    "validation_accuracy",
    "fit",
    "relative_error",
    "gamma_shift",
    "network_predictor",
    "evaluation_grid",
]


@dataclass(frozen=True)
class GridSpec:
    """Hyperparameter grid: depths x widths."""

    depths: tuple[int, ...] = (2, 3, 4)
    widths: tuple[int, ...] = (64, 128)

    def __post_init__(self):
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if not self.depths or not self.widths:
            raise DomainError("grid must have at least one depth and one width")
        if any(d < 1 for d in self.depths) or any(w < 1 for w in self.widths):
            raise DomainError("grid entries must be positive")

    def cells(self) -> list[tuple[int, int]]:
        return [(d, w) for d in self.depths for w in self.widths]

    def to_dict(self) -> dict:
        return {"depths": list(self.depths), "widths": list(self.widths)}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(depths=tuple(d["depths"]), widths=tuple(d["widths"]))


@dataclass(frozen=True)
class FitResult:
    """Selected network with its grid cell and validation accuracy."""

    network: Network
    depth: int
    width: int
    validation_accuracy: float
    weighted: bool
    w1: float
    w0: float
    history: tuple[tuple[int, float, float], ...] = field(repr=False)


def validation_accuracy(
    net: Network, val: CaseControlSample | Dataset, clamp: float | None = None
) -> float:
    """Fraction of rows where 1[psi(g(x)) >= 0.5] equals y (ties classify as 1)."""
    if val is None:
        raise DomainError("validation set is empty")
    data = val.data if isinstance(val, CaseControlSample) else val
    if data.n == 0:
        raise DomainError("validation set is empty")
    g = forward_batch(net, data.X, clamp)
    pred = (g >= 0.0).astype(np.int8)  # psi(g) >= 0.5 iff g >= 0
    return float(np.mean(pred == data.y))


def fit(
    train_set: CaseControlSample,
    val: CaseControlSample,
    weights: tuple[float, float],
    grid: GridSpec,
    config: TrainConfig,
) -> FitResult:
    """Train one fresh network per grid cell, select by validation accuracy.

    Every cell initializes and shuffles from seeds derived from
    (config.seed, depth, width), so cells share nothing and reruns are
    deterministic.  A diverging cell is dropped; if every cell diverges the
    error propagates.
    """
    if train_set.data.n == 0 or val is None or val.data.n == 0:
        raise DomainError("fit needs nonempty train and validation sets")
    w1, w0 = weights
    best = None
    best_key = None
    n_diverged = 0
    for depth, width in grid.cells():
        arch = Architecture(train_set.data.p, depth, width)
        net0 = init_network(arch, derive_seed(config.seed, "init", depth, width))
        cell_config = replace(config, seed=derive_seed(config.seed, "shuffle", depth, width))
        try:
            net, history = train(net0, train_set, w1, w0, cell_config, monitor=val)
        except DivergenceError:
            n_diverged += 1
            continue
        acc = validation_accuracy(net, val, config.output_clamp)
        key = (acc, -arch.size, -depth)
        if best_key is None or key > best_key:
            best_key = key
            best = FitResult(
                network=net,
                depth=depth,
                width=width,
                validation_accuracy=acc,
                weighted=not (w1 == 1.0 and w0 == 1.0),
                w1=w1,
                w0=w0,
                history=tuple(history),
            )
    if best is None:
        raise DivergenceError(f"all {n_diverged} grid cells diverged")
    return best


def relative_error(fit_g: Callable, true_g: GFunction, test_X) -> float:
    """RE = sum |fit(x) - g(x)| / sum |g(x)| over the test points."""
    X = np.asarray(test_X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DomainError("test points must form a nonempty (m, p) matrix")
    truth = true_g(X)
    denom = float(np.sum(np.abs(truth)))
    if denom <= 0.0:
        raise DegenerateTruthError("degenerate truth: sum |g(x_i)| is zero on the test points")
    fitted = np.asarray(fit_g(X), dtype=float).ravel()
    return float(np.sum(np.abs(fitted - truth)) / denom)


def gamma_shift(fit_w: Callable, fit_u: Callable, test_X) -> float:
    """Median over the test points of (unweighted fit - weighted fit).

    Diagnoses the case-control intercept bias; at balanced sampling its
    theoretical value is log(n1*(1-P1)/(n0*P1)).
    """
    X = np.asarray(test_X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DomainError("test points must form a nonempty (m, p) matrix")
    return float(np.median(np.asarray(fit_u(X)) - np.asarray(fit_w(X))))


def network_predictor(net: Network, clamp: float | None = None) -> Callable:
    """The fitted function as a plain (m, p) -> (m,) callable."""
    return lambda X: forward_batch(net, X, clamp)


def evaluation_grid(n_points: int = 200, upper: float = 2.0) -> np.ndarray:
    """Equispaced points on (0, upper], as an (n, 1) matrix (univariate plots/RE)."""
    if n_points < 1:
        raise DomainError("need at least one grid point")
    return (np.arange(1, n_points + 1) * (upper / n_points)).reshape(-1, 1)
