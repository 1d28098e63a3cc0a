# %% [markdown]
# # Closed-form rates and where they stop being true
#
# The theory module evaluates the analytical rates for a configuration. This
# walk-through checks a few of them numerically.

# %%
import numpy as np

from overparam_lab import (
    ExperimentConfig,
    check_local_strong_convexity,
    entry_time,
    linear_convergence_certificate,
    make_teacher,
    population_hessian_quadratic_form,
    run,
    single_neuron_bounds,
    theory_report,
)

report = theory_report(nu=0.1, eta=0.001)
for key in ("margin", "contraction_factor", "eta_cap", "delta", "T_gamma_bound", "gap_lower_bound",
            "K_positive_max"):
    print(f"{key:>20}: {getattr(report, key)}")

# %% [markdown]
# ## A single neuron enters the benign region in time
#
# Starting from |w0[1]| = 0.01, the bound promises entry into the
# gamma = 0.1 region within about 8335 steps. The actual run is much faster.

# %%
teacher = make_teacher(10)
w0 = np.zeros((10, 1))
w0[0, 0] = 0.01
traj = run(ExperimentConfig(K=1, mode="population", iters=9000, stop_tol=None), W0=w0, teacher=teacher)
bound = single_neuron_bounds(0.1, 1.0, 0.01, 0.001)
print(f"measured entry {entry_time(traj, 'gamma', gamma=0.1)}, bound {bound.T_gamma_bound:.1f}")

# %% [markdown]
# ## Strong convexity fails once K > 1
#
# Near a multi-neuron optimum W = w* q^T the claimed lower bound on the
# curvature is 2 ||w*||^2 ||V||^2, but the direction V = u r^T with u
# orthogonal to w* and r orthogonal to q has no curvature at all.

# %%
rng = np.random.default_rng(0)
q = rng.standard_normal(3)
q /= np.linalg.norm(q)
W = np.outer(teacher.w_star, q)
u = np.zeros(10)
u[1:] = rng.standard_normal(9)
r = rng.standard_normal(3)
r -= (r @ q) * q
V = np.outer(u, r) / np.linalg.norm(np.outer(u, r))
print("curvature along u r^T:", population_hessian_quadratic_form(W, V, teacher))
print("bound holds:", check_local_strong_convexity(W, V, teacher, nu=0.0))

# %% [markdown]
# The practical consequence: the distance stops contracting at the
# certified rate 1 - eta * margin after a K = 3 run enters nu = 0.1.

# %%
cert = linear_convergence_certificate(0.1, 0.001, 1.0)
traj = run(ExperimentConfig(K=3, mode="population", iters=20_000, stop_tol=None))
d2 = traj.dist ** 2
start = entry_time(traj, "nu", nu=0.1)
ratios = d2[start + 1:] / d2[start:-1]
print(f"certified factor {cert.contraction_factor:.5f}, worst observed {ratios.max():.7f}")
