"""Marginal case-proportion estimation from external summary information.

Step one of the two-step procedure: the total-expectation identity
P1*mu1 + (1-P1)*mu0 = mu is solved at plug-in estimates, giving

    P1-hat = (mu_tilde - mu0-hat) / (mu1-hat - mu0-hat),

the inverse-probability weights w1-hat = n1/(n*P1-hat) and
w0-hat = n0/(n*(1-P1-hat)), and a delta-method variance for
sqrt(n)*(P1-hat - P1) built from the map H(x, y, z) = (x-z)/(y-z):

    a1 = dH/dy = (mu0 - mu)/(mu1 - mu0)^2      (paired with mu1-hat)
    a2 = dH/dz = (mu - mu1)/(mu1 - mu0)^2      (paired with mu0-hat)
    a3 = dH/dx = 1/(mu1 - mu0)                 (paired with mu_tilde)

    Var = a1^2*V1 + a2^2*V0 + a3^2*V,

with V1 = (n/n1)*Var(h|Y=1), V0 = (n/n0)*Var(h|Y=0) (the sampling fraction
n1/n plays the role of lambda1) and V = n*v_ext the rescaled variance of the
external estimate (0 when the summary is treated as exact).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CaseControlSample, SummarySpec
from .errors import DomainError, SummaryNonIdentifyingError

__all__ = [
    "ExternalSummary",
    "ProportionEstimate",
    "conditional_means",
    "estimate_p1",
    "estimate_weights",
    "delta_variance",
    "Z_95",
    "DEFAULT_EPSILON",
]

Z_95 = 1.959964  # hard-coded 95% normal quantile; other levels out of scope
DEFAULT_EPSILON = 1e-3


@dataclass(frozen=True)
class ExternalSummary:
    """An externally estimated moment mu_tilde of h(X), with optional precision.

    v_ext is Var-hat(mu_tilde); when None the summary is treated as exact
    and the external term drops out of the delta-method variance.
    """

    h: SummarySpec
    mu_tilde: float
    v_ext: float | None = None
    n_e: int | None = None

    def __post_init__(self):
        if not np.isfinite(self.mu_tilde):
            raise DomainError("mu_tilde must be finite")
        if self.v_ext is not None and self.v_ext < 0:
            raise DomainError("v_ext must be nonnegative")

    def to_dict(self) -> dict:
        d = {"h": self.h.to_dict(), "mu_tilde": self.mu_tilde}
        if self.v_ext is not None:
            d["v_ext"] = self.v_ext
        if self.n_e is not None:
            d["n_e"] = self.n_e
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExternalSummary":
        return cls(
            h=SummarySpec.from_dict(d["h"]),
            mu_tilde=float(d["mu_tilde"]),
            v_ext=float(d["v_ext"]) if "v_ext" in d and d["v_ext"] is not None else None,
            n_e=int(d["n_e"]) if "n_e" in d and d["n_e"] is not None else None,
        )


@dataclass(frozen=True)
class ProportionEstimate:
    """P1-hat with weights, delta-method variance components and a 95% CI."""

    p1_hat: float
    p1_hat_clamped: float
    w1_hat: float
    w0_hat: float
    mu1_hat: float
    mu0_hat: float
    variance: float  # of sqrt(n) * (P1-hat - P1)
    se: float  # of P1-hat, sqrt(variance / n)
    ci: tuple[float, float]
    a1: float
    a2: float
    a3: float
    v1: float
    v0: float
    summary_exact: bool  # True when v_ext was absent (CI treats mu_tilde as exact)

    def to_dict(self) -> dict:
        d = {
            "p1_hat": self.p1_hat,
            "p1_hat_clamped": self.p1_hat_clamped,
            "w1_hat": self.w1_hat,
            "w0_hat": self.w0_hat,
            "mu1_hat": self.mu1_hat,
            "mu0_hat": self.mu0_hat,
            "variance": self.variance,
            "se": self.se,
            "ci": list(self.ci),
            "a1": self.a1,
            "a2": self.a2,
            "a3": self.a3,
            "v1": self.v1,
            "v0": self.v0,
        }
        if self.summary_exact:
            d["note"] = "summary treated as exact"
        return d


def conditional_means(sample: CaseControlSample, h: SummarySpec) -> tuple[float, float]:
    """Within-stratum means of h: (mu1-hat over cases, mu0-hat over controls)."""
    vals = h.evaluate(sample.data.X)
    cases = sample.data.y == 1
    return float(np.mean(vals[cases])), float(np.mean(vals[~cases]))


def estimate_p1(
    mu1_hat: float, mu0_hat: float, mu_tilde: float, epsilon: float = DEFAULT_EPSILON
) -> tuple[float, float]:
    """Solve the total-expectation identity; returns (raw, clamped to [eps, 1-eps])."""
    if not 0 < epsilon < 0.5:
        raise DomainError("epsilon must lie in (0, 0.5)")
    denom = mu1_hat - mu0_hat
    if abs(denom) <= 1e-12:
        raise SummaryNonIdentifyingError(
            f"summary non-identifying: mu1_hat ({mu1_hat}) and mu0_hat ({mu0_hat}) coincide"
        )
    p1 = (mu_tilde - mu0_hat) / denom
    return p1, float(min(max(p1, epsilon), 1.0 - epsilon))


def estimate_weights(n1: int, n0: int, n: int, p1: float) -> tuple[float, float]:
    """Sampling weights w1 = n1/(n*p1), w0 = n0/(n*(1-p1)) for p1 in (0,1)."""
    if n != n1 + n0:
        raise DomainError(f"n={n} != n1+n0={n1 + n0}")
    if not 0.0 < p1 < 1.0:
        raise DomainError(f"p1 must lie strictly in (0, 1), got {p1}; clamp first")
    return n1 / (n * p1), n0 / (n * (1.0 - p1))


def delta_variance(
    sample: CaseControlSample,
    h: SummarySpec,
    summary: ExternalSummary,
    epsilon: float = DEFAULT_EPSILON,
) -> ProportionEstimate:
    """Full step-one inference: P1-hat, weights, variance, coefficients, 95% CI."""
    if sample.n1 < 2 or sample.n0 < 2:
        raise DomainError("delta-method variance needs at least 2 rows per stratum")
    mu1, mu0 = conditional_means(sample, h)
    p1, p1c = estimate_p1(mu1, mu0, summary.mu_tilde, epsilon)
    w1, w0 = estimate_weights(sample.n1, sample.n0, sample.n, p1c)

    mu_t = summary.mu_tilde
    denom = mu1 - mu0
    a1 = (mu0 - mu_t) / denom**2
    a2 = (mu_t - mu1) / denom**2
    a3 = 1.0 / denom

    vals = h.evaluate(sample.data.X)
    cases = sample.data.y == 1
    lam1 = sample.n1 / sample.n
    v1 = float(np.var(vals[cases], ddof=1)) / lam1
    v0 = float(np.var(vals[~cases], ddof=1)) / (1.0 - lam1)
    v_ext_scaled = sample.n * summary.v_ext if summary.v_ext is not None else 0.0

    variance = a1 * a1 * v1 + a2 * a2 * v0 + a3 * a3 * v_ext_scaled
    se = float(np.sqrt(variance / sample.n))
    return ProportionEstimate(
        p1_hat=p1,
        p1_hat_clamped=p1c,
        w1_hat=w1,
        w0_hat=w0,
        mu1_hat=mu1,
        mu0_hat=mu0,
        variance=float(variance),
        se=se,
        ci=(p1 - Z_95 * se, p1 + Z_95 * se),
        a1=float(a1),
        a2=float(a2),
        a3=float(a3),
        v1=v1,
        v0=v0,
        summary_exact=summary.v_ext is None,
    )
