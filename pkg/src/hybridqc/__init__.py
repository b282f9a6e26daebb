"""Markovian quantum-classical hybrid dynamics.

Hybrid states are lattices of unnormalised conditional density matrices.
Generators for the four coupling mechanisms, their diffusive and quantum
Fokker-Planck limits, an RK4 integrator and exact Bessel and Gaussian
benchmarks live in the submodules; the common entry points are re-exported
here.
"""
__version__ = "0.1.0"

from .analytic import (CoherentDephasingWalk, DephasingWalk, DiffusionParams,
                       discrete_solution, example_continuum_solution,
                       gaussian_propagator, positivity_thresholds)
from .bessel import bessel_i, bessel_i_scaled
from .config import RunConfig, parse_config, serialize
from .diagnostics import (compare_discrete_continuum, detect_positivity_time,
                          run_scenario)
from .diffusive import (DiffusiveSpec, JumpKernel, JumpMoments,
                        build_diffusive_generator, build_fourth_exact_generator,
                        build_qfp_generator, check_validity, jump_moments)
from .errors import (BoundaryLeakError, ConfigError, CPViolationError,
                     DomainError, HybridError, NumericalError)
from .evolution import IntegrationPlan, Trajectory, integrate
from .generator import GeneratorBuilder, HybridGenerator
from .mechanisms import (ClassicalHopping, CoherentHopping, ConditionalLindblad,
                         GeneralHopping, LindbladRateHopping, OperatorBasis,
                         build_generator, embed_bipartite, validate_rate_matrix)
from .state import (HybridState, Lattice, make_gaussian_state,
                    make_localized_state, validate_state)
