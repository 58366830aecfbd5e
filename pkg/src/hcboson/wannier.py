"""Planck-cell phase space: Gaussian packets, symmetric orthogonalization,
level projections and macro-operator diagnostics.

Each lattice site carries one copy of the same single-oscillator phase space,
tiled by cells of length x0 and width k0 with x0*k0 = 2*pi. One Gaussian
packet per cell,

    g_{jx,jk}(x) = exp[-(x - jx*x0)^2 / (4*zeta^2) + i*jk*k0*x],

is turned into an orthonormal set {w_j} with the symmetric (inverse square
root of the Gram matrix) method: it is order-free and keeps the lattice
symmetry, unlike sequential Gram-Schmidt. The two lowest oscillator levels
are then expanded over the frame, C[m][i] = <w_i | phi_m>, and the per-cell
masses |C|^2 feed every entropy calculation.

All inner products are trapezoidal quadrature on a uniform grid; the
momentum operator acts spectrally through the FFT.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConditioningError, ResolutionError, ValidationError,
                     WindowError)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhaseGrid:
    """Cell geometry plus the real-space quadrature grid."""

    x0: float
    k0: float
    zeta: float
    wx: int
    wk: int
    dx: float
    extent: float
    x: np.ndarray = field(repr=False)

    @property
    def n_cells(self) -> int:
        return (2 * self.wx + 1) * (2 * self.wk + 1)

    def cells(self) -> list[tuple[int, int]]:
        """Cell index pairs, jx-major, each axis ascending."""
        return [(jx, jk)
                for jx in range(-self.wx, self.wx + 1)
                for jk in range(-self.wk, self.wk + 1)]


def make_phase_grid(x0: float = np.sqrt(TWO_PI), k0: float | None = None,
                    zeta: float | None = None, wx: int = 2, wk: int = 2,
                    dx: float = 0.05, extent: float = 12.0) -> PhaseGrid:
    """Validated phase grid. Defaults: square cells x0 = k0 = sqrt(2*pi),
    packet width zeta = sqrt(x0/(2*k0)), window wx = wk = 2 (25 cells)."""
    if k0 is None:
        k0 = TWO_PI / x0
    if zeta is None:
        zeta = np.sqrt(x0 / (2.0 * k0))
    if abs(x0 * k0 - TWO_PI) > 1e-12:
        raise ValidationError(f"x0*k0 = {x0 * k0!r} must equal 2*pi within 1e-12")
    if wx < 0 or wk < 0 or dx <= 0 or extent <= 0 or zeta <= 0:
        raise ValidationError("window, spacing, extent and zeta must be positive")
    k_max = max(wk, 1) * k0
    wavelength = TWO_PI / k_max
    if dx > min(zeta, wavelength) / 8.0:
        raise ResolutionError(
            f"dx = {dx} too coarse: need dx <= min(zeta, 2*pi/k_max)/8 = "
            f"{min(zeta, wavelength) / 8.0:.4g}")
    if extent < wx * x0 + 6.0 * zeta:
        raise ResolutionError(
            f"extent = {extent} too small: need >= wx*x0 + 6*zeta = "
            f"{wx * x0 + 6.0 * zeta:.4g} so packets decay at the boundary")
    n = int(round(2.0 * extent / dx)) + 1
    x = -extent + dx * np.arange(n)
    return PhaseGrid(float(x0), float(k0), float(zeta), int(wx), int(wk),
                     float(dx), float(extent), x)


def _trapezoid_weights(grid: PhaseGrid) -> np.ndarray:
    w = np.full(grid.x.size, grid.dx)
    w[0] = w[-1] = grid.dx / 2.0
    return w


def quad_inner(grid: PhaseGrid, f: np.ndarray, g: np.ndarray):
    """Trapezoidal <f|g>; broadcasts over leading axes of g."""
    return np.tensordot(np.conj(f) * _trapezoid_weights(grid), g.T, axes=1).T


def build_gaussian_packets(grid: PhaseGrid) -> np.ndarray:
    """(n_cells, n_points) array of L2-normalized packets, in cell order."""
    x = grid.x
    packets = np.empty((grid.n_cells, x.size), dtype=np.complex128)
    for row, (jx, jk) in enumerate(grid.cells()):
        g = np.exp(-((x - jx * grid.x0) ** 2) / (4.0 * grid.zeta ** 2)
                   + 1j * jk * grid.k0 * x)
        norm_sq = np.real(quad_inner(grid, g, g))
        exact = grid.zeta * np.sqrt(TWO_PI)  # analytic L2 norm^2 of the packet
        if abs(norm_sq - exact) / exact > 1e-6:
            raise ResolutionError(
                f"quadrature normalization error {abs(norm_sq - exact) / exact:.3e} "
                f"for cell ({jx}, {jk}); refine dx or enlarge the extent")
        packets[row] = g / np.sqrt(norm_sq)
    return packets


def orthogonalize(grid: PhaseGrid, packets: np.ndarray,
                  min_eigenvalue: float = 1e-10) -> np.ndarray:
    """Symmetric orthogonalization: w_j = sum_i (G^{-1/2})_{ij} g_i.

    The result is the orthonormal set closest to the packets in least
    squares, and is invariant (up to the same permutation) under any
    permutation of the input.
    """
    weights = _trapezoid_weights(grid)
    gram = (np.conj(packets) * weights) @ packets.T
    gram = 0.5 * (gram + gram.conj().T)
    evals, evecs = np.linalg.eigh(gram)
    if evals.min() <= min_eigenvalue:
        raise ConditioningError(
            f"packet Gram matrix nearly singular: min eigenvalue "
            f"{evals.min():.3e} <= {min_eigenvalue:.3e}")
    inv_sqrt = (evecs * (1.0 / np.sqrt(evals))) @ evecs.conj().T
    wannier = np.tensordot(inv_sqrt, packets, axes=(0, 0))
    gram_w = (np.conj(wannier) * weights) @ wannier.T
    defect = np.max(np.abs(gram_w - np.eye(len(packets))))
    if defect > 1e-8:
        raise ConditioningError(f"orthogonalization defect {defect:.3e} > 1e-8")
    return wannier


def sequential_orthogonalize(grid: PhaseGrid, packets: np.ndarray) -> np.ndarray:
    """Sequential (Gram-Schmidt) orthogonalization, cross-check mode only.

    Spans the same space as :func:`orthogonalize` but the individual
    functions depend on the input order, which is exactly why the symmetric
    method is the supported path.
    """
    weights = _trapezoid_weights(grid)
    out = np.array(packets, dtype=np.complex128, copy=True)
    for j in range(out.shape[0]):
        for i in range(j):
            out[j] -= np.sum(np.conj(out[i]) * weights * out[j]) * out[i]
        norm = np.sqrt(np.real(np.sum(np.abs(out[j]) ** 2 * weights)))
        if norm < 1e-10:
            raise ConditioningError(
                f"sequential orthogonalization broke down at function {j}")
        out[j] /= norm
    return out


def oscillator_levels(grid: PhaseGrid, length: float = 1.0) -> np.ndarray:
    """phi_0 (Gaussian) and phi_1 (Hermite-1), quadrature-normalized."""
    x = grid.x / length
    phi0 = np.exp(-0.5 * x ** 2)
    phi1 = np.sqrt(2.0) * x * phi0
    levels = np.stack([phi0, phi1]).astype(np.complex128)
    for m in range(2):
        levels[m] /= np.sqrt(np.real(quad_inner(grid, levels[m], levels[m])))
    return levels


def project_levels(grid: PhaseGrid, wannier: np.ndarray,
                   oscillator_length: float = 1.0, leak_tol: float = 1e-3):
    """Expansion coefficients C[m, i] = <w_i | phi_m> and per-level leakage.

    Leakage is 1 - sum_i |C[m, i]|^2, the level weight outside the window.
    """
    levels = oscillator_levels(grid, oscillator_length)
    C = np.empty((2, wannier.shape[0]), dtype=np.complex128)
    for m in range(2):
        C[m] = quad_inner(grid, wannier, levels[m])
    leakage = 1.0 - np.sum(np.abs(C) ** 2, axis=1)
    if np.any(leakage > leak_tol):
        raise WindowError(
            f"level leakage {leakage.tolist()} above tolerance {leak_tol}; "
            f"enlarge the cell window (wx, wk)")
    return C, leakage


@dataclass(frozen=True)
class WannierFrame:
    """Orthonormal per-site cell frame plus level-projection data.

    ``C`` holds the raw overlaps; ``level_cell_mass`` the row-normalized
    per-cell masses actually used by the entropy formulas (rows sum to 1
    exactly, leakage is reported separately).
    """

    grid: PhaseGrid
    cell_index: np.ndarray = field(repr=False)  # (M, 2) int
    functions: np.ndarray | None = field(repr=False)  # (M, n_points) or None
    C: np.ndarray = field(repr=False)  # raw (2, M) complex
    leakage: np.ndarray = field(repr=False)
    oscillator_length: float = 1.0
    leak_tol: float = 1e-3

    @property
    def n_cells(self) -> int:
        return self.C.shape[1]

    @property
    def level_coeff(self) -> np.ndarray:
        """Row-normalized C: the within-window representation of each level."""
        norms = np.sqrt(np.sum(np.abs(self.C) ** 2, axis=1))
        return self.C / norms[:, None]

    @property
    def level_cell_mass(self) -> np.ndarray:
        """(2, M) real: cell probability of each level, rows summing to 1."""
        d = np.abs(self.C) ** 2
        return d / d.sum(axis=1)[:, None]

    @property
    def frame_hash(self) -> str:
        h = hashlib.sha256()
        g = self.grid
        h.update(repr((g.x0, g.k0, g.zeta, g.wx, g.wk, g.dx, g.extent,
                       self.oscillator_length)).encode())
        h.update(np.ascontiguousarray(self.C).tobytes())
        return h.hexdigest()[:12]

    def export_text(self) -> str:
        """Header (geometry + leakage) then `m jx jk re im` rows of raw C."""
        g = self.grid
        lines = [
            f"# x0 = {g.x0!r}",
            f"# k0 = {g.k0!r}",
            f"# zeta = {g.zeta!r}",
            f"# wx = {g.wx}",
            f"# wk = {g.wk}",
            f"# dx = {g.dx!r}",
            f"# extent = {g.extent!r}",
            f"# oscillator_length = {self.oscillator_length!r}",
            f"# leak_tol = {self.leak_tol!r}",
            f"# leakage0 = {float(self.leakage[0])!r}",
            f"# leakage1 = {float(self.leakage[1])!r}",
        ]
        for m in range(2):
            for i, (jx, jk) in enumerate(self.cell_index):
                c = self.C[m, i]
                lines.append(f"{m} {jx} {jk} {float(c.real)!r} {float(c.imag)!r}")
        return "\n".join(lines) + "\n"


def build_frame(grid: PhaseGrid | None = None, oscillator_length: float = 1.0,
                leak_tol: float = 1e-3, **grid_kwargs) -> WannierFrame:
    """One-call construction: packets -> orthogonalize -> project."""
    if grid is None:
        grid = make_phase_grid(**grid_kwargs)
    packets = build_gaussian_packets(grid)
    wannier = orthogonalize(grid, packets)
    C, leakage = project_levels(grid, wannier, oscillator_length, leak_tol)
    cells = np.array(grid.cells(), dtype=np.int64)
    return WannierFrame(grid, cells, wannier, C, leakage,
                        float(oscillator_length), float(leak_tol))


def load_frame(text: str) -> WannierFrame:
    """Rebuild a frame from :meth:`WannierFrame.export_text` output.

    The real-space functions are not serialized, so the loaded frame
    supports entropy work but not macro diagnostics.
    """
    header: dict[str, float] = {}
    rows = []
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln:
            continue
        if ln.startswith("#"):
            key, _, val = ln[1:].partition("=")
            header[key.strip()] = float(val.strip())
            continue
        m, jx, jk, re, im = ln.split()
        rows.append((int(m), int(jx), int(jk), float(re), float(im)))
    try:
        grid = make_phase_grid(x0=header["x0"], k0=header["k0"],
                               zeta=header["zeta"], wx=int(header["wx"]),
                               wk=int(header["wk"]), dx=header["dx"],
                               extent=header["extent"])
    except KeyError as exc:
        raise ValidationError(f"frame record is missing header key {exc}") from exc
    M = grid.n_cells
    if len(rows) != 2 * M:
        raise ValidationError(f"expected {2 * M} coefficient rows, got {len(rows)}")
    cells = grid.cells()
    cell_pos = {cell: i for i, cell in enumerate(cells)}
    C = np.zeros((2, M), dtype=np.complex128)
    for m, jx, jk, re, im in rows:
        C[m, cell_pos[(jx, jk)]] = re + 1j * im
    leakage = np.array([header.get("leakage0", 1.0 - np.sum(np.abs(C[0]) ** 2)),
                        header.get("leakage1", 1.0 - np.sum(np.abs(C[1]) ** 2))])
    return WannierFrame(grid, np.array(cells, dtype=np.int64), None, C, leakage,
                        header.get("oscillator_length", 1.0),
                        header.get("leak_tol", 1e-3))


@dataclass(frozen=True)
class MacroDiagnostics:
    """Spread of position/momentum inside each cell, and the macro operators."""

    order: int
    q_means: np.ndarray
    p_means: np.ndarray
    dq: np.ndarray
    dp: np.ndarray

    @property
    def Q_matrix(self) -> np.ndarray:
        return np.diag(self.q_means)

    @property
    def P_matrix(self) -> np.ndarray:
        return np.diag(self.p_means)


def _momentum_apply(grid: PhaseGrid, f: np.ndarray) -> np.ndarray:
    """p f = -i df/dx via FFT (functions decay at the boundary by the grid
    invariants, so the implicit periodic wrap is below quadrature noise)."""
    k = TWO_PI * np.fft.fftfreq(grid.x.size, d=grid.dx)
    return np.fft.ifft(k * np.fft.fft(f, axis=-1), axis=-1)


def macro_spreads(frame: WannierFrame, order: int = 2) -> MacroDiagnostics:
    """Per-cell <q>, <p> and i-th central spreads; Q, P are diagonal in the
    Wannier basis, so [Q, P] = 0 identically."""
    if order < 2:
        raise ValidationError(f"spread order must be >= 2, got {order}")
    if frame.functions is None:
        raise ValidationError("frame carries no real-space functions "
                              "(loaded from text?); rebuild to diagnose")
    grid = frame.grid
    nyquist = np.pi / grid.dx
    if grid.wk * grid.k0 + 3.0 / grid.zeta > nyquist:
        raise ResolutionError(
            f"spectral derivative would alias: cell momenta reach "
            f"{grid.wk * grid.k0 + 3.0 / grid.zeta:.3g} "
            f"but the grid Nyquist wavenumber is {nyquist:.3g}")
    w = frame.functions
    density = np.abs(w) ** 2
    weights = _trapezoid_weights(grid)
    q_means = density @ (grid.x * weights)
    pw = _momentum_apply(grid, w)
    p_means = np.real(np.sum(np.conj(w) * weights * pw, axis=1))

    dq = np.empty(frame.n_cells)
    dp = np.empty(frame.n_cells)
    for j in range(frame.n_cells):
        mom_q = np.sum((grid.x - q_means[j]) ** order * density[j] * weights)
        dq[j] = np.sign(mom_q) * np.abs(mom_q) ** (1.0 / order)
        g = w[j]
        for _ in range(order):
            g = _momentum_apply(grid, g) - p_means[j] * g
        mom_p = np.real(np.sum(np.conj(w[j]) * weights * g))
        dp[j] = np.sign(mom_p) * np.abs(mom_p) ** (1.0 / order)
    return MacroDiagnostics(order, q_means, p_means, dq, dp)
