"""Step one: recover P1 from a case-control sample plus one external moment.

A balanced case-control sample carries no information about P1.  But if an
external source reports mu = E[h(X)] for any h with different means across
cases and controls, the total-expectation identity

    P1 * mu1 + (1 - P1) * mu0 = mu

identifies P1, and plugging in the within-stratum means gives the closed
form P1_hat = (mu_tilde - mu0_hat) / (mu1_hat - mu0_hat).  The delta method
yields a variance and a 95% interval that accounts for the external
estimate's own noise.
"""

import numpy as np

import ccwnet as cw

SEED = 7
pop = cw.PopulationSpec(cw.get_g("T1"))
truth = cw.true_p1(pop).value
print(f"population: g(x) = {pop.g.label}, true P1 = {truth:.4f}\n")

# the analyst sees 500 cases + 500 controls (sample proportion 0.5, useless)
sample = cw.sample_case_control(pop, 500, 500, seed=SEED)
print(f"case-control sample: n1={sample.n1}, n0={sample.n0} -> label mean 0.5 by design")

# an external registry reports the covariate mean from 2000 records
h = cw.SummarySpec.coordinate(0)
summary = cw.make_external_summary(pop, h, 2000, seed=SEED + 1)
print(f"external summary:    mu_tilde = {summary.mu_tilde:.4f} "
      f"(se {np.sqrt(summary.v_ext):.4f}, n_e = {summary.n_e})\n")

est = cw.delta_variance(sample, h, summary)
print(f"P1_hat  = {est.p1_hat:.4f}   (true {truth:.4f})")
print(f"se      = {est.se:.4f}")
print(f"95% CI  = ({est.ci[0]:.4f}, {est.ci[1]:.4f})   covers truth: {est.ci[0] <= truth <= est.ci[1]}")
print(f"weights = w1 {est.w1_hat:.4f}, w0 {est.w0_hat:.4f}")
print(f"weight mass check (n1/w1 + n0/w0)/n = "
      f"{(sample.n1 / est.w1_hat + sample.n0 / est.w0_hat) / sample.n:.12f}\n")

# the estimate is invariant to affine re-expressions of the summary moment
h_f = cw.SummarySpec.affine(0, a=9.0 / 5.0, b=32.0)  # report h in "Fahrenheit"
summary_f = cw.ExternalSummary(
    h=h_f, mu_tilde=9 / 5 * summary.mu_tilde + 32, v_ext=(9 / 5) ** 2 * summary.v_ext,
    n_e=summary.n_e,
)
est_f = cw.delta_variance(sample, h_f, summary_f)
print(f"affine-rescaled summary gives P1_hat = {est_f.p1_hat:.10f} "
      f"(difference {abs(est_f.p1_hat - est.p1_hat):.2e})")
