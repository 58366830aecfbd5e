"""Entropy over the Fock basis and over joint phase-cell space.

Conventions: natural logarithm (nats) throughout; 0*ln(0) = 0. Cell
probabilities use the frame's row-normalized level masses, so the joint
distribution of any product (Fock) state sums to exactly 1 and its entropy
is additive over sites; window leakage is reported separately by the frame.

Two joint-probability routes are shipped: the factorized mixture

    p(i_1..i_n) = sum_m |lambda_m|^2 prod_k d_{s_k(m)}(i_k)

(the default, drops inter-Fock-state interference) and the exact overlap

    p(i_1..i_n) = |sum_m lambda_m prod_k C_hat[s_k(m)][i_k]|^2

which keeps cross terms. Both prune enumeration subtrees whose remaining
mass is below theta and report the dropped mass delta together with the
entropy error bound delta*(n*ln M - ln delta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dynamics import QuantumState
from ..errors import CostError, ValidationError, WindowError
from ..fock import FockBasis
from ..wannier import WannierFrame
from . import backend as _backend

__all__ = [
    "shannon", "f_entropy", "w_entropy_factorized", "w_entropy_exact",
    "w_entropy_mixed", "mean_fock_w_entropy", "fock_w_entropy",
    "WEntropyResult", "WEntropyEvaluator", "entropy_error_bound",
]

DEFAULT_THETA = 1e-14
DEFAULT_COST_BUDGET = 5e8  # worst-case enumerated tuples


def shannon(p) -> float:
    """-sum p ln p in nats, with 0*ln(0) = 0.

    Accepts sub-normalized distributions (mass may have been pruned or may
    sit outside the window); rejects negative entries beyond -1e-12 and
    total mass beyond 1 + 1e-9.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.size == 0:
        return 0.0
    if float(p.min()) < -1e-12:
        raise ValidationError(f"negative probability {p.min()!r}")
    total = float(p.sum())
    if total > 1.0 + 1e-9:
        raise ValidationError(f"probabilities sum to {total!r} > 1")
    q = p[p > 0.0]
    return float(-np.sum(q * np.log(q)))


def f_entropy(state: QuantumState) -> float:
    """Shannon entropy of |amplitudes|^2 over the Fock basis."""
    state.check_norm(1e-8)
    return shannon(state.probabilities())


def w_entropy_mixed(cell_diagonal) -> float:
    """Entropy of a density operator's diagonal in the Wannier basis.

    For a pure state this diagonal equals the exact cell probabilities, so
    the result coincides with :func:`w_entropy_exact`.
    """
    return shannon(cell_diagonal)


def entropy_error_bound(dropped: float, n_sites: int, n_cells: int) -> float:
    """Upper bound on the entropy carried by dropped mass delta spread over
    at most M^n cells: delta*(n*ln M - ln delta)."""
    if dropped <= 0.0:
        return 0.0
    return max(dropped * (n_sites * np.log(n_cells) - np.log(dropped)), 0.0)


@dataclass(frozen=True)
class WEntropyResult:
    entropy: float
    dropped_mass: float
    error_bound: float


class WEntropyEvaluator:
    """Reusable joint-cell entropy evaluator for one (basis, frame) pair.

    Precomputes the occupation table and pruning arrays once; each call then
    costs only the enumeration itself. Pure function of its inputs, safe to
    call concurrently.
    """

    def __init__(self, basis: FockBasis, frame: WannierFrame,
                 method: str = "factorized", theta: float = DEFAULT_THETA,
                 backend: str | None = None,
                 cost_budget: float = DEFAULT_COST_BUDGET):
        if method not in ("factorized", "exact"):
            raise ValidationError(f"unknown W-entropy method {method!r}")
        if theta < 0.0:
            raise ValidationError(f"prune threshold must be >= 0, got {theta}")
        if np.max(frame.leakage) > frame.leak_tol:
            raise WindowError(
                f"frame leakage {frame.leakage.tolist()} above its tolerance "
                f"{frame.leak_tol}; rebuild with a larger window or tolerance")
        worst = float(frame.n_cells) ** basis.n_sites
        if worst > cost_budget:
            raise CostError(
                f"joint enumeration may touch {worst:.3g} cell tuples "
                f"(> budget {cost_budget:.3g}); shrink the window, raise "
                f"theta, or raise the budget")
        self.basis = basis
        self.frame = frame
        self.method = method
        self.theta = float(theta)
        self._backend = _backend.get_backend(backend)
        self._bits = basis.occupations()
        if method == "factorized":
            d = frame.level_cell_mass
            self._d0, self._d1 = d[0].copy(), d[1].copy()
            self._rem, self._order = _backend.prepare_factorized(
                self._bits, self._d0, self._d1)
        else:
            C = frame.level_coeff
            self._C0, self._C1 = C[0].copy(), C[1].copy()
            self._rem, self._order = _backend.prepare_exact(
                self._bits, self._C0, self._C1)

    @property
    def backend_name(self) -> str:
        return _backend.backend_name(self._backend)

    def __call__(self, state: QuantumState) -> WEntropyResult:
        if state.basis.dim != self.basis.dim or \
                state.basis.n_sites != self.basis.n_sites or \
                state.basis.n_particles != self.basis.n_particles:
            raise ValidationError("state sector does not match the evaluator")
        if self.method == "factorized":
            S, dropped, _ = self._backend.fact_entropy(
                state.probabilities(), self._bits, self._d0, self._d1,
                self._rem, self._order, self.theta)
        else:
            S, dropped, _ = self._backend.exact_entropy(
                state.amplitudes, self._bits, self._C0, self._C1,
                self._rem, self._order, self.theta)
        bound = entropy_error_bound(dropped, self.basis.n_sites,
                                    self.frame.n_cells)
        return WEntropyResult(float(S), float(dropped), bound)


def w_entropy_factorized(state: QuantumState, frame: WannierFrame,
                         theta: float = DEFAULT_THETA,
                         backend: str | None = None,
                         cost_budget: float = DEFAULT_COST_BUDGET) -> WEntropyResult:
    """Joint-cell entropy from the factorized (interference-free) formula."""
    state.check_norm(1e-8)
    ev = WEntropyEvaluator(state.basis, frame, "factorized", theta, backend,
                           cost_budget)
    return ev(state)


def w_entropy_exact(state: QuantumState, frame: WannierFrame,
                    theta: float = DEFAULT_THETA,
                    backend: str | None = None,
                    cost_budget: float = DEFAULT_COST_BUDGET) -> WEntropyResult:
    """Joint-cell entropy from exact cell overlaps (cross terms kept)."""
    state.check_norm(1e-8)
    ev = WEntropyEvaluator(state.basis, frame, "exact", theta, backend,
                           cost_budget)
    return ev(state)


def fock_w_entropy(frame: WannierFrame, n_sites: int, n_occupied: int) -> float:
    """W entropy of any product Fock state: additive over sites."""
    d = frame.level_cell_mass
    h0 = shannon(d[0])
    h1 = shannon(d[1])
    return n_occupied * h1 + (n_sites - n_occupied) * h0


def mean_fock_w_entropy(basis: FockBasis, frame: WannierFrame) -> float:
    """Mean factorized W entropy over the Fock basis.

    Every state in a fixed-N sector is a product state with the same
    occupation counts, so each term (and hence the mean) equals
    N*H(d1) + (n-N)*H(d0).
    """
    return fock_w_entropy(frame, basis.n_sites, basis.n_particles)
