"""Exact time evolution psi(t) = exp(-iHt) psi(0) in a fixed Fock sector.

Two propagation routes share one interface: spectral decomposition for small
dimensions (every sample time evaluated directly, no error accumulation) and
Lanczos/Krylov stepping for dimensions where a dense eigendecomposition is
infeasible. hbar = 1; times are in units of 1/J.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, ValidationError
from .fock import FockBasis, SparseHamiltonian

SPECTRAL_CUTOFF = 4000  # dense eigh above this dimension is not worth it


@dataclass(frozen=True)
class QuantumState:
    """Complex amplitudes over a Fock basis, unit norm."""

    basis: FockBasis
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.amplitudes.shape != (self.basis.dim,):
            raise ValidationError(
                f"amplitude vector length {self.amplitudes.shape} does not "
                f"match basis dimension {self.basis.dim}")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def check_norm(self, tol: float = 1e-10) -> "QuantumState":
        if abs(self.norm - 1.0) > tol:
            raise ValidationError(f"state norm {self.norm!r} deviates from 1 "
                                  f"by more than {tol}")
        return self

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def basis_state(basis: FockBasis, sites) -> QuantumState:
    """The Fock basis state with the given sites occupied."""
    sites = sorted(int(s) for s in sites)
    if len(set(sites)) != basis.n_particles:
        raise ValidationError(f"need {basis.n_particles} distinct sites, got {sites}")
    mask = 0
    for s in sites:
        if not 0 <= s < basis.n_sites:
            raise ValidationError(f"site {s} outside 0..{basis.n_sites - 1}")
        mask |= 1 << s
    amps = np.zeros(basis.dim, dtype=np.complex128)
    amps[basis.index_of(mask)] = 1.0
    return QuantumState(basis, amps)


@dataclass(frozen=True)
class Propagator:
    mode: str  # "spectral" | "krylov"
    H: SparseHamiltonian
    eigenvalues: np.ndarray | None = field(default=None, repr=False)
    eigenvectors: np.ndarray | None = field(default=None, repr=False)
    krylov_dim: int = 30
    krylov_tol: float = 1e-9  # local error per unit time

    @property
    def dim(self) -> int:
        return self.H.dim


def make_propagator(H: SparseHamiltonian, policy: str = "auto",
                    krylov_dim: int = 30, krylov_tol: float = 1e-9) -> Propagator:
    """Select and prepare a propagation route.

    policy="auto" picks spectral for dim <= 4000 and krylov above. The
    spectral route validates eigenvector orthogonality and reconstruction
    of H to 1e-9 before use.
    """
    if policy not in ("auto", "spectral", "krylov"):
        raise ValidationError(f"unknown propagator policy {policy!r}")
    mode = policy
    if policy == "auto":
        mode = "spectral" if H.dim <= SPECTRAL_CUTOFF else "krylov"
    if mode == "krylov":
        return Propagator("krylov", H, krylov_dim=krylov_dim, krylov_tol=krylov_tol)

    dense = H.matrix.toarray()
    evals, evecs = np.linalg.eigh(dense)
    ortho = np.max(np.abs(evecs.T @ evecs - np.eye(H.dim)))
    recon = np.max(np.abs((evecs * evals) @ evecs.T - dense))
    if ortho > 1e-9 or recon > 1e-9:
        raise ConvergenceError(
            f"eigendecomposition failed validation: orthogonality defect "
            f"{ortho:.3e}, reconstruction defect {recon:.3e}")
    return Propagator("spectral", H, eigenvalues=evals, eigenvectors=evecs)


def _spectral_evolve(prop: Propagator, amps: np.ndarray, t: float) -> np.ndarray:
    coeff = prop.eigenvectors.T @ amps
    return prop.eigenvectors @ (np.exp(-1j * prop.eigenvalues * t) * coeff)


def _lanczos(H: SparseHamiltonian, v: np.ndarray, m: int):
    """m-step Lanczos with full reorthogonalization.

    Returns (V, alpha, beta) where V is dim x k (k <= m), alpha the k
    diagonal and beta the k-1 sub-diagonal recurrence coefficients, plus the
    final residual norm beta_k (0 on invariant-subspace breakdown).
    """
    dim = v.shape[0]
    m = min(m, dim)
    V = np.empty((dim, m), dtype=np.complex128)
    alpha = np.empty(m)
    beta = np.empty(max(m - 1, 0))
    V[:, 0] = v
    w = None
    beta_k = 0.0
    k = 0
    for k in range(m):
        w = H.matrix.dot(V[:, k])
        a = np.real(np.vdot(V[:, k], w))  # H Hermitian -> real
        alpha[k] = a
        w = w - a * V[:, k]
        if k > 0:
            w = w - beta[k - 1] * V[:, k - 1]
        # full reorthogonalization: cheap next to the matvec, keeps the
        # tridiagonal faithful over long trajectories
        w = w - V[:, :k + 1] @ (V[:, :k + 1].conj().T @ w)
        beta_k = float(np.linalg.norm(w))
        if k + 1 < m:
            if beta_k < 1e-14:
                return V[:, :k + 1], alpha[:k + 1], beta[:k], 0.0
            beta[k] = beta_k
            V[:, k + 1] = w / beta_k
    return V, alpha, beta, beta_k


def _krylov_phi(alpha, beta, dt: float, scale: float) -> np.ndarray:
    """exp(-i dt T) e1 for the Lanczos tridiagonal, times the input norm."""
    if len(alpha) == 1:
        return np.array([np.exp(-1j * dt * alpha[0]) * scale])
    theta, S = eigh_tridiagonal(alpha, beta)
    return (S @ (np.exp(-1j * dt * theta) * S[0].conj())) * scale


def _krylov_evolve(prop: Propagator, amps: np.ndarray, t: float) -> np.ndarray:
    """Adaptive-substep Lanczos propagation over time t (may be negative).

    Local error per substep is estimated as the difference between the m- and
    (m+1)-dimensional Krylov approximations; a substep is accepted when the
    estimate is below krylov_tol * |substep|.
    """
    if t == 0.0:
        return amps.copy()
    direction = 1.0 if t > 0 else -1.0
    remaining = abs(t)
    # spectral-radius guess from one Lanczos pass sets the starting substep
    psi = amps.copy()
    dt = remaining
    max_halvings = 60
    while remaining > 0.0:
        step = min(dt, remaining)
        nrm = float(np.linalg.norm(psi))
        V, alpha, beta, beta_k = _lanczos(prop.H, psi / nrm, prop.krylov_dim + 1)
        k = len(alpha)
        accepted = False
        for _ in range(max_halvings):
            u_full = _krylov_phi(alpha, beta, direction * step, nrm)
            if k > 1:
                u_small = _krylov_phi(alpha[:k - 1], beta[:k - 2], direction * step, nrm)
                est = float(np.linalg.norm(u_full[:k - 1] - u_small)) + abs(u_full[-1])
            else:
                est = 0.0  # invariant subspace: propagation is exact
            if est <= prop.krylov_tol * max(step, 1e-16):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise ConvergenceError(
                f"krylov step at t-remaining {remaining:.3g} could not reach "
                f"local tolerance {prop.krylov_tol}; raise krylov_dim or the "
                f"tolerance, or use the spectral propagator")
        psi = V @ u_full
        remaining -= step
        dt = step * 2.0  # try growing again
    return psi


def evolve(prop: Propagator, psi0: QuantumState, t: float) -> QuantumState:
    """exp(-iHt) psi0. Negative t runs the evolution backwards."""
    psi0.check_norm(1e-8)
    if prop.dim != psi0.basis.dim:
        raise ValidationError("state and propagator dimensions differ")
    if prop.mode == "spectral":
        out = _spectral_evolve(prop, psi0.amplitudes, t)
    else:
        out = _krylov_evolve(prop, psi0.amplitudes, t)
    return QuantumState(psi0.basis, out)


@dataclass(frozen=True)
class Trajectory:
    """Sampled observer values along an evolution."""

    times: np.ndarray
    series: dict[str, np.ndarray]


def sample_trajectory(prop: Propagator, psi0: QuantumState, dt: float,
                      n_steps: int, observers: dict) -> Trajectory:
    """Apply each observer to psi(k*dt) for k = 0..n_steps.

    Spectral mode evaluates every sample time independently (no error
    accumulation); krylov mode composes steps sequentially. Observer values
    are assembled in time order regardless of evaluation order.
    """
    if dt <= 0:
        raise ValidationError(f"sampling interval must be positive, got {dt}")
    psi0.check_norm(1e-8)
    times = np.arange(n_steps + 1) * dt
    collected: dict[str, list] = {name: [] for name in observers}

    def observe(k, state):
        for name, fn in observers.items():
            try:
                collected[name].append(fn(state))
            except Exception as exc:
                raise type(exc)(
                    f"observer {name!r} failed at t={times[k]:.6g}: {exc}"
                ) from exc

    if prop.mode == "spectral":
        coeff = prop.eigenvectors.T @ psi0.amplitudes
        chunk = max(1, int(2 ** 22 // max(prop.dim, 1)))  # ~64 MB of complex
        for start in range(0, n_steps + 1, chunk):
            ts = times[start:start + chunk]
            phases = np.exp(-1j * np.outer(prop.eigenvalues, ts))
            block = prop.eigenvectors @ (phases * coeff[:, None])
            for off in range(len(ts)):
                observe(start + off, QuantumState(psi0.basis, block[:, off]))
    else:
        psi = psi0
        observe(0, psi)
        for k in range(1, n_steps + 1):
            psi = evolve(prop, psi, dt)
            observe(k, psi)
    series = {name: np.asarray(vals) for name, vals in collected.items()}
    return Trajectory(times, series)
