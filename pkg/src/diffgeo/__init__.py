"""Exact-score variance-exploding diffusion sampling and its geometry."""
__version__ = "0.1.0"

from ._kernels import BACKEND
from .dataset import PointSet, dataset_mean, gen_gmm, load_csv, write_csv
from .denoiser import (Denoiser, denoise_optimal, make_perturbed, mixture_log_density, mixture_score,
                       optimal)
from .schedule import TimeGrid, build_grid, weight_sequence
from .sampler import (Trajectory, TrajectoryBatch, euler_step, heun_step, ode_jump, ode_rhs, perturb_forward,
                      sample_batch, solve, solve_batch)
from .meanshift import annealed_step, mean_shift_converge, mean_vector
from .geometry import (angle_cosine, batch_profile, chord_deviation, expansion_probability, thin_shell_experiment,
                       trajectory_report)
from .interp import InterpSpec, interpolate, variance_factor, variance_sweep
from .diagnose import deviation_curves, knn
