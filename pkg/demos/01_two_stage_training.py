# %% [markdown]
# # Two-stage training of an over-parametrised student
#
# A quadratic-activation student with K neurons learns the labels
# y = (x^T w*)^2 of a single teacher neuron w* = e_1. We train K = 1, 3 and 10
# with the same step size on the same 200 samples and watch three numbers:
# the training loss, the distance to the closest zero-error solution w* q^T,
# and the curvature of the loss along the direction pointing at that solution.

# %%
import numpy as np

from overparam_lab import ExperimentConfig, entry_time, run

ITERS = 20_000  # raise to 100_000 to see the late stage in full
cfg = ExperimentConfig(iters=ITERS, record_stride=10)

# %% [markdown]
# Every run shares the training set, the test set and the first columns of
# the initial weights, so K is the only thing that changes.

# %%
runs = {K: run(cfg.replace(K=K)) for K in (1, 3, 10)}

# %%
print(f"{'t':>7} " + " ".join(f"{'loss K=' + str(K):>13}" for K in runs))
for t in (0, 500, 1000, 1500, 2000, 3000, 5000, 10_000, ITERS):
    cells = []
    for traj in runs.values():
        i = np.searchsorted(traj.t, t)
        cells.append(f"{traj.train_loss[min(i, len(traj) - 1)]:13.3e}")
    print(f"{t:7d} " + " ".join(cells))

# %% [markdown]
# The loss sits on a plateau while the neurons are tiny, then falls quickly.
# The wider students leave the plateau first: the curvature along the path to
# the optimum turns positive for good earlier, and the distance drops below
# 0.1 sooner.

# %%
for K, traj in runs.items():
    print(f"K={K:2d}  curvature positive from t={entry_time(traj, 'curvature')}"
          f"  dist <= 0.1 from t={entry_time(traj, 'nu', nu=0.1)}"
          f"  final loss {traj.train_loss[-1]:.2e}")

# %% [markdown]
# With K > 1 the very last stretch is slow. At a zero-error solution w* q^T
# any change u r^T with u orthogonal to w* and r orthogonal to q leaves the
# loss flat to second order, so near the end the loss shrinks polynomially
# rather than geometrically. The single neuron has no such directions and
# converges to machine precision.
