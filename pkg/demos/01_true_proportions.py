"""True marginal case proportions of the six benchmark functions.

The marginal proportion P1 = E[sigmoid(g(X))] under uniform covariates is
what a case-control sample cannot reveal on its own: the sampling design
fixes the label counts, so P1 must come from somewhere else.  This script
prints the oracle values the rest of the demos refer back to.

Univariate functions use composite midpoint quadrature (error ~1e-9);
the 6-dimensional ones use 10^7 Monte Carlo draws (se ~1e-4).
"""

import ccwnet as cw

print(f"{'tag':<5}{'form':<45}{'P1':>8}{'se':>10}  method")
for tag in ("T1", "T2", "T3", "T4", "T5", "T6"):
    g = cw.get_g(tag)
    est = cw.true_p1(cw.PopulationSpec(g), oracle_draws=10_000_000, seed=0)
    print(f"{tag:<5}{g.label:<45}{est.value:>8.4f}{est.se:>10.1e}  {est.method}")

print()
print("The same numbers via the CLI:  ccwnet oracle --g T1")
