"""Anisotropic electrokinetic flow on a staggered grid.

Incompressible flow, two ion species with drift-diffusion, and an anisotropic
Poisson problem with Robin data, coupled by a Picard loop and audited against
the energy balance of the continuous system.  Also: dense resolvent checks and
tangential calculus on closed curves.
"""

from .anisotropy import DirectorField, TensorField, preset_director, tensor_from_director
from .config import SimConfig, parse_config, parse_text, serialize
from .coupler import Simulation, coupled_step, kappa_sweep, run
from .energy import EnergyLedger, audit_energy_inequality, audit_regularized_energy, dissipation, energy
from .errors import (AnisokinError, ConfigError, ConvergenceError, InvariantViolation, ParameterError, PicardError,
                     SpectralError, StepRejected, StructuralError)
from .grid import Grid, MACField
from .navier_stokes import FlowState, ns_step
from .nernst_planck import ChargePair, np_step
from .poisson import PoissonSolver, RobinBC, assemble_anisotropic_robin, robin_resolvent_skappa, solve_spd
from .state import Constants, SimulationState

__version__ = "0.1.0"
