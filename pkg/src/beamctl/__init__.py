"""beamctl: precise multi-point beampattern level control for sensor arrays.

The core engine assigns virtual interferences to a normalized covariance so
that the gain-optimal weight pins chosen response levels exactly; on top of it
sit pattern synthesis, amplitude-constrained adaptive beamforming and
quiescent pattern control, plus a scenario simulator and a CLI.
"""

from .arrays import (AngleGrid, ArrayGeometry, CosinePowerPattern, IsotropicPattern,
                     TabulatedPattern, array_gain, db_from_linear, linear_array,
                     linear_from_db, output_sinr, pattern_over_grid, response_level,
                     steering_matrix, steering_vector, ula)
from .control import ControlTask, SingleControlResult, control_single, solve_single_beta
from .covariance import (BlockAssignment, VirtualCovariance, apply_block_update,
                         deserialize_ledger, h_from_sigma, identity_vcm, modified_weight,
                         optimal_weight, replay_ledger, serialize_ledger, sigma_from_h)
from .iterative import IterativeConfig, MultiPointResult, solve_iterative
from .admm import (CadmmConfig, ConsensusState, RealQCQP, build_real_qcqp,
                   initialize_consensus, project_qcqp1, recover, run_cadmm, solve_cadmm)
from .synthesis import (DesiredPattern, SynthesisConfig, SynthesisResult,
                        audit_sidelobe_peaks, detect_sidelobe_peaks, rank_and_truncate,
                        select_mainlobe_angles, synthesize)
from .beamforming import (ConstraintSpec, QcmvResult, estimate_noise_power, lcmv, qcmv,
                          sample_covariance, sinr_report)
from .quiescent import (QuiescentDesign, adapt, adapt_with_constraints, design_quiescent,
                        load_design, save_design)
from .scenario import (Scenario, complex_normals, control_metrics, generate_snapshots,
                       splitmix64, true_covariance, uniform_draws)

__version__ = "0.1.0"
