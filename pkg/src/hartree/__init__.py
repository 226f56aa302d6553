"""Time-dependent Hartree approximation: split-step integrator, Picard scheme,
full 2D reference solver and diagnostics."""

from .grid import Grid1D, WaveFunction, make_grid, inner_product, l2_norm, gaussian
from .potentials import (BumpSpec, PotentialSet, AssumptionReport, preset_example,
                         shift_to_H1, check_assumptions, averaged_potential_over_x,
                         averaged_potential_over_y)
from .propagator import StepPlan, make_plan, strang_step, imaginary_time_ground_state
from .scheme import (HartreeState, HartreeTrajectory, PicardReport, hartree_step, run_hartree,
                     picard_solve, continue_picard)
from .reference import State2D, Trajectory2D, product_state, full_step_2d, run_full, hartree_error
from .diagnostics import (DiagnosticsRecord, TangentVector, energy, graded_norm, tangent_project,
                          dirac_frenkel_residual)

__version__ = "0.1.0"
