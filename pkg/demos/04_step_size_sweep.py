# %% [markdown]
# # Step-size sweep
#
# A larger student enters the benign region in fewer steps, which looks like
# a larger step size. Can a single neuron simply use a larger step instead?
# Past a threshold, no: the run blows up or stalls.

# %%
from overparam_lab import ExperimentConfig, entry_time, run

ITERS = 5000
print(f"{'eta':>6} {'K':>3} {'status':>10} {'final loss':>11} {'entry':>6}")
for eta in (1.0, 0.5, 0.4, 0.3, 0.2, 0.1, 0.01):
    for K in (1, 3, 10):
        traj = run(ExperimentConfig(K=K, eta=eta, iters=ITERS, record_stride=1))
        entry = entry_time(traj, "curvature")
        print(f"{eta:6g} {K:3d} {traj.status:>10} {traj.train_loss[-1]:11.2e} {str(entry):>6}")

# %% [markdown]
# The same grid is available from the command line and writes one CSV per
# run plus a JSON summary:
#
#     overparam-lab stepsize-sweep --iters 5000 --trials 1 --out runs/sweep
