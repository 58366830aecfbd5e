"""Hard-core boson lattice dynamics with Planck-cell phase-space entropies.

Build the system from a lattice graph and a fixed-particle-number Fock
sector, evolve it exactly, map states onto a per-site Wannier cell frame,
and track Fock-basis and phase-cell entropies together with the derived
statistics (linear law, saturation fit, regression period).
"""

__version__ = "0.1.0"

from .analysis import (LinearFit, PeriodResult, SaturationFit, detect_period,
                       fit_linear, fit_saturation)
from .config import RunConfig, load_config
from .dynamics import (Propagator, QuantumState, Trajectory, basis_state,
                       evolve, make_propagator, sample_trajectory)
from .entropy import (WEntropyEvaluator, WEntropyResult, f_entropy,
                      mean_fock_w_entropy, shannon, w_entropy_exact,
                      w_entropy_factorized, w_entropy_mixed)
from .fock import (FockBasis, SparseHamiltonian, apply_hamiltonian,
                   build_hamiltonian, enumerate_basis, particle_hole_map)
from .lattice import (LatticeGraph, build_chain, build_custom, build_grid,
                      build_ring)
from .runner import build_system, find_period, run_trace
from .trace import EntropyTrace, read_trace, write_trace
from .wannier import (MacroDiagnostics, PhaseGrid, WannierFrame, build_frame,
                      build_gaussian_packets, load_frame, macro_spreads,
                      make_phase_grid, orthogonalize, project_levels)

__all__ = [name for name in dir() if not name.startswith("_")]
