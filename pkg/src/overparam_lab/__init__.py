"""Gradient descent on an over-parametrised quadratic-activation student
learning a single teacher neuron, with distance/curvature diagnostics and
the matching closed-form bounds."""
from .config import ExperimentConfig
from .metrics import (
    Alignment,
    InteractionComponents,
    NeuronDecomposition,
    curvature_quantity,
    decompose,
    distance_to_teacher,
    entry_time,
    estimate_interaction_ratios,
    interaction_components,
    optimal_alignment,
    running_interaction_ratios,
)
from .model import Dataset, TeacherProblem, init_network, make_teacher, make_teacher_from_vector, sample_dataset
from .objective import (
    empirical_gradient,
    empirical_loss,
    hessian_quadratic_form,
    population_gradient,
    population_hessian_quadratic_form,
    population_loss,
)
from .outputs import read_trajectory, write_trajectory
from .presets import run_preset
from .theory import (
    check_local_strong_convexity,
    check_smoothness,
    gaussian_moment_oracle,
    linear_convergence_certificate,
    overparam_gap_bound,
    perp_decay_bound,
    projection_aggregation_bound,
    single_neuron_bounds,
    theory_report,
)
from .trainer import DivergenceError, DynamicsMode, IterationRecord, Trajectory, gd_step, run

__version__ = "0.1.0"
