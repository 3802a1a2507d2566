"""Step two, univariate: the weighted fit recovers g, the unweighted one is shifted.

Trains the inverse-probability-weighted MLP and the plain unweighted MLP on
the same T1 case-control sample, then evaluates both on a 200-point grid.
The unweighted fit tracks the shape of g but rides log(n1*(1-P1)/(n0*P1))
too high: exactly the intercept term that case-control sampling destroys.

Writes curves.csv (x, g_true, g_hat_weighted, g_hat_unweighted) next to this
script for plotting with any external tool.

Reduced settings (small grid, 800 epochs) keep the demo around a minute; the
full protocol is the (2,3,4) x (64,128) grid at up to 10,000 epochs.
"""

from pathlib import Path

import numpy as np

import ccwnet as cw

SEED = 11
pop = cw.PopulationSpec(cw.get_g("T1"))
truth = cw.true_p1(pop).value

sample = cw.sample_case_control(pop, 500, 500, seed=SEED)
h = cw.SummarySpec.coordinate(0)
summary = cw.make_external_summary(pop, h, 2000, seed=SEED + 1)
prop = cw.delta_variance(sample, h, summary)
print(f"step one: P1_hat = {prop.p1_hat:.4f} (true {truth:.4f}), "
      f"weights ({prop.w1_hat:.3f}, {prop.w0_hat:.3f})")

train_part, val_part, _ = cw.split_dataset(sample, cw.SplitSpec((0.8, 0.2, 0.0), seed=SEED + 2))
grid = cw.GridSpec(depths=(2, 3), widths=(32,))
config = cw.TrainConfig(max_epochs=800, seed=SEED + 3)

fit_w = cw.fit(train_part, val_part, (prop.w1_hat, prop.w0_hat), grid, config)
fit_u = cw.fit(train_part, val_part, (1.0, 1.0), grid, config)
print(f"step two: weighted fit chose (D={fit_w.depth}, W={fit_w.width}), "
      f"val accuracy {fit_w.validation_accuracy:.3f}")
print(f"          unweighted fit chose (D={fit_u.depth}, W={fit_u.width}), "
      f"val accuracy {fit_u.validation_accuracy:.3f}\n")

grid_X = cw.evaluation_grid(200)
pred_w = cw.network_predictor(fit_w.network)
pred_u = cw.network_predictor(fit_u.network)
re_w = cw.relative_error(pred_w, pop.g, grid_X)
re_u = cw.relative_error(pred_u, pop.g, grid_X)
shift = cw.gamma_shift(pred_w, pred_u, grid_X)
gamma_theory = np.log((1 - truth) / truth)  # balanced design: log(n1(1-P1)/(n0 P1))

print(f"relative error: weighted {re_w:.4f}, unweighted {re_u:.4f}")
print(f"median shift (unweighted - weighted) = {shift:.4f}; theory gamma = {gamma_theory:.4f}")

out = Path(__file__).parent / "curves.csv"
with open(out, "w", encoding="utf-8") as fh:
    fh.write("x,g_true,g_hat_weighted,g_hat_unweighted\n")
    for x, t, w, u in zip(grid_X[:, 0], pop.g(grid_X), pred_w(grid_X), pred_u(grid_X)):
        fh.write(f"{x:.4f},{t:.6f},{w:.6f},{u:.6f}\n")
print(f"\nwrote {out}")
