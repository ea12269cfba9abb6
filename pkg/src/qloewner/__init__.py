"""Quadratic state-space model inference from frequency response kernels.

Identification of systems E x' = A x + Q(x kron x) + B u, y = C x from
samples of the first three symmetric generalized frequency response
functions: Loewner rational interpolation recovers the minimal linear
subsystem, least squares plus a Newton-corrected quadratic vector equation
recover the quadratic operator, and dedicated solvers handle nonzero
equilibria, initial conditions, and cross-coordinate alignment.
"""

from .system import (QuadraticSystem, SimulationTrace,
                     SimulationDivergenceError, simulate,
                     symmetrize_quadratic, shift_to_equilibrium,
                     markov_invariants, apply_transform,
                     equilibrium_residual, apply_quadratic, quad_matrix,
                     kron_vec, load_system, save_system, system_to_json,
                     system_from_json, trace_to_csv)
from .gfrf import (GfrfSample, MeasurementSet, GfrfEvaluator, Resolvent,
                   SingularResolventError, resolvent, h1, h2, h3, g_maps,
                   h3_cross, sample_kernels, save_measurements,
                   load_measurements)
from .loewner import (LoewnerPencil, RealizedLinear, ConjugateClosureError,
                      partition, build_pencil, realify, reveal_order,
                      realize, infer_x0_linear, ensure_conjugate_closed,
                      interpolation_error)
from .quadid import (ParameterizedQuadratic, QveProblem, NewtonResult,
                     QveDivergenceError, InferOptions, InferReport,
                     assemble_h2_ls, solve_with_nullspace, assemble_qve,
                     newton_qve, project_qve, solve_qve_multistart,
                     infer_quadratic, sym_dim, antisym_dim, sym_basis)
from .equilibria import (AffineFamily, EquilibriumSolution,
                         parameterize_equilibrium, solve_equilibrium,
                         recover_equilibrium, global_model,
                         infer_x0_quadratic)
from .alignment import (AlignmentResult, observability_transform,
                        align_qbc_newton, frechet_step, frechet_derivative,
                        qme_value, triplet_residual)
from .probing import (Tone, ProbePlan, ProbeResult, SpectrumEstimate,
                      SweepResult, SteadyStateError, BinCollisionError,
                      IllConditionedSweepError, probe_complex_single,
                      probe_complex_multi, probe_real_amplitude_sweep,
                      detect_steady_state, merge_probe_results, sawtooth,
                      decaying_sawtooth)
from .benchmarks import (BenchmarkSpec, make_linear_intro, make_quad_toy,
                         make_lorenz, make_burgers, lorenz_equilibria,
                         paper_grids)

__version__ = "0.1.0"
