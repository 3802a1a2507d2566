"""Synthetic data generation under the nonparametric logistic model.

Provides the six benchmark regression functions T1..T6, Bernoulli labeling
through the sigmoid link, exact case-control sampling by rejection, external
summary generation, and an oracle for the true marginal case proportion
P1 = E[sigmoid(g(X))] with X uniform on (0,2]^p.

The support is open at 0 because T4 = -2 - log(x) diverges there; a uniform
draw of exactly 0.0 (probability ~2^-53 per draw) is mapped to the smallest
positive double.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import CaseControlSample, Dataset, SummarySpec
from .errors import DomainError, RareClassExhaustionError
from .numerics import sigmoid
from .proportion import ExternalSummary

__all__ = [
    "GFunction",
    "PopulationSpec",
    "TrueProportion",
    "get_g",
    "register_g",
    "g_eval",
    "true_p1",
    "sample_population",
    "sample_case_control",
    "make_external_summary",
]

SUPPORT = (0.0, 2.0)  # open at 0, see module docstring

# draw budget multiplier before declaring a class unreachably rare
_REJECTION_BUDGET = 10_000


def _t1(X: np.ndarray) -> np.ndarray:
    return -3.0 + 2.0 * X[:, 0]


def _t2(X: np.ndarray) -> np.ndarray:
    return -2.0 + 3.0 * np.sin(4.0 * X[:, 0])


def _t3(X: np.ndarray) -> np.ndarray:
    return -2.0 * (X[:, 0] - 1.0) ** 2


def _t4(X: np.ndarray) -> np.ndarray:
    x = X[:, 0]
    if np.any(x <= 0):
        raise DomainError("T4 = -2 - log(x) requires x > 0")
    return -2.0 - np.log(x)


def _t5(X: np.ndarray) -> np.ndarray:
    return (
        -4.0 * X[:, 0]
        + X[:, 1]
        + X[:, 2]
        - 3.0 * X[:, 3] ** 2
        + np.sqrt(X[:, 4] * np.exp(X[:, 5]))
    )


def _t6(X: np.ndarray) -> np.ndarray:
    return (
        np.sin(X[:, 0] + X[:, 1])
        + X[:, 2]
        - 2.0 * X[:, 3] ** 2
        + X[:, 4] * np.log(X[:, 5] + 3.0)
    )


@dataclass(frozen=True)
class GFunction:
    """A regression function with its arity and a vectorized evaluator."""

    tag: str
    arity: int
    label: str
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.arity:
            raise DomainError(
                f"{self.tag} expects an (n, {self.arity}) matrix, got shape {X.shape}"
            )
        return np.asarray(self.evaluator(X), dtype=float)


_REGISTRY: dict[str, GFunction] = {
    "T1": GFunction("T1", 1, "-3 + 2x", _t1),
    "T2": GFunction("T2", 1, "-2 + 3sin(4x)", _t2),
    "T3": GFunction("T3", 1, "-2(x-1)^2", _t3),
    "T4": GFunction("T4", 1, "-2 - log(x)", _t4),
    "T5": GFunction("T5", 6, "-4x1 + x2 + x3 - 3x4^2 + sqrt(x5*exp(x6))", _t5),
    "T6": GFunction("T6", 6, "sin(x1+x2) + x3 - 2x4^2 + x5*log(x6+3)", _t6),
}


def get_g(tag: str) -> GFunction:
    try:
        return _REGISTRY[tag]
    except KeyError:
        raise DomainError(f"unknown g function tag {tag!r}; known: {sorted(_REGISTRY)}") from None


def register_g(g: GFunction) -> None:
    """Register a custom function so scenarios can refer to it by tag."""
    _REGISTRY[g.tag] = g


@dataclass(frozen=True)
class PopulationSpec:
    """Covariate law (uniform on the fixed support) plus the true g."""

    g: GFunction
    support: tuple[float, float] = SUPPORT

    @property
    def p(self) -> int:
        return self.g.arity


@dataclass(frozen=True)
class TrueProportion:
    """Oracle estimate of P1 with its standard error and the method used."""

    value: float
    se: float
    method: str

    def to_dict(self) -> dict:
        return {"true_p1": self.value, "se": self.se, "method": self.method}


def g_eval(g: GFunction, x) -> float:
    """Evaluate g at a single covariate vector."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(g(x.reshape(1, -1))[0])


def _uniform_support(rng: np.random.Generator, n: int, p: int) -> np.ndarray:
    X = rng.uniform(SUPPORT[0], SUPPORT[1], size=(n, p))
    X[X == 0.0] = np.nextafter(0.0, 1.0)
    return X


def true_p1(
    spec: PopulationSpec,
    oracle_draws: int = 10_000_000,
    seed: int = 0,
    panels: int = 200_000,
) -> TrueProportion:
    """Oracle for P1 = E[sigmoid(g(X))].

    Univariate g uses composite midpoint quadrature with ``panels`` panels
    (error ~1e-9 for the benchmark functions, reported se 0); otherwise a
    Monte Carlo average over ``oracle_draws`` uniform draws with its
    standard error.
    """
    if spec.p == 1:
        if panels < 100_000:
            raise DomainError("quadrature needs at least 1e5 panels")
        h = (SUPPORT[1] - SUPPORT[0]) / panels
        x = SUPPORT[0] + (np.arange(panels) + 0.5) * h
        vals = sigmoid(spec.g(x.reshape(-1, 1)))
        return TrueProportion(float(np.mean(vals)), 0.0, f"midpoint-{panels}")
    if oracle_draws < 1_000_000:
        raise DomainError("Monte Carlo oracle needs at least 1e6 draws")
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    block = 1_000_000
    done = 0
    while done < oracle_draws:
        m = min(block, oracle_draws - done)
        vals = sigmoid(spec.g(_uniform_support(rng, m, spec.p)))
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += m
    mean = total / oracle_draws
    var = max(total_sq / oracle_draws - mean * mean, 0.0)
    return TrueProportion(mean, float(np.sqrt(var / oracle_draws)), f"mc-{oracle_draws}")


def sample_population(spec: PopulationSpec, n: int, seed: int) -> Dataset:
    """n i.i.d. rows: X uniform on the support, Y | X ~ Bernoulli(sigmoid(g(X)))."""
    if n < 1:
        raise DomainError("need n >= 1")
    rng = np.random.default_rng(seed)
    X = _uniform_support(rng, n, spec.p)
    probs = sigmoid(spec.g(X))
    y = (rng.random(n) < probs).astype(np.int8)
    return Dataset(y, X)


def sample_case_control(spec: PopulationSpec, n1: int, n0: int, seed: int) -> CaseControlSample:
    """Exactly n1 cases and n0 controls, by rejection from the population law.

    Population rows are generated in fixed-size blocks and routed by label
    until both quotas fill; rows beyond a filled quota are discarded.  The
    result keeps encounter order.  Raises RareClassExhaustionError if the
    budget of 1e4*(n1+n0) population rows is hit first (a near-degenerate g).
    """
    if n1 < 1 or n0 < 1:
        raise DomainError("need n1 >= 1 and n0 >= 1")
    rng = np.random.default_rng(seed)
    budget = _REJECTION_BUDGET * (n1 + n0)
    need = {1: n1, 0: n0}
    kept_X: list[np.ndarray] = []
    kept_y: list[np.ndarray] = []
    drawn = 0
    block = 4096
    while need[1] > 0 or need[0] > 0:
        if drawn >= budget:
            raise RareClassExhaustionError(
                f"rare class exhaustion: {drawn} population draws filled only "
                f"{n1 - need[1]}/{n1} cases and {n0 - need[0]}/{n0} controls"
            )
        m = min(block, budget - drawn)
        X = _uniform_support(rng, m, spec.p)
        probs = sigmoid(spec.g(X))
        y = (rng.random(m) < probs).astype(np.int8)
        drawn += m
        # route in draw order, dropping rows whose stratum is already full
        keep = np.zeros(m, dtype=bool)
        for label in (1, 0):
            if need[label] > 0:
                hits = np.flatnonzero(y == label)[: need[label]]
                keep[hits] = True
                need[label] -= hits.size
        if np.any(keep):
            kept_X.append(X[keep])
            kept_y.append(y[keep])
    data = Dataset(np.concatenate(kept_y), np.vstack(kept_X))
    return CaseControlSample(data=data, n1=n1, n0=n0, n=n1 + n0)


def make_external_summary(
    spec: PopulationSpec, h: SummarySpec, n_e: int, seed: int
) -> ExternalSummary:
    """Independent covariate sample of size n_e; returns the h-moment summary.

    mu_tilde is the sample mean of h and v_ext its squared standard error,
    i.e. the sample variance of h divided by n_e.
    """
    if n_e < 2:
        raise DomainError("need n_e >= 2")
    rng = np.random.default_rng(seed)
    vals = h.evaluate(_uniform_support(rng, n_e, spec.p))
    mu = float(np.mean(vals))
    v_ext = float(np.var(vals, ddof=1) / n_e)
    return ExternalSummary(h=h, mu_tilde=mu, v_ext=v_ext, n_e=n_e)
