"""Trace statistics: the linear S_w/S_f law, exponential saturation fits
with r^2, and epsilon-rule regression-period detection.

r^2 is always 1 - SSE/SST with SST = sum (Data - mean)^2 and
SSE = sum (Data - Fit)^2 (no adjusted variant).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError, ValidationError
from .trace import EntropyTrace


def r_squared(data: np.ndarray, fit: np.ndarray) -> float:
    data = np.asarray(data, dtype=float)
    fit = np.asarray(fit, dtype=float)
    sst = float(np.sum((data - data.mean()) ** 2))
    sse = float(np.sum((data - fit) ** 2))
    if sst == 0.0:
        raise FitError("r^2 undefined: data has zero variance")
    return 1.0 - sse / sst


@dataclass(frozen=True)
class LinearFit:
    k: float
    b: float
    r2: float
    n_samples: int

    def predict(self, s_f):
        return self.k * np.asarray(s_f) + self.b


def linear_fit_xy(x, y) -> LinearFit:
    """Ordinary least squares of y on x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValidationError(f"need >= 3 samples for a linear fit, got {x.size}")
    var = float(np.sum((x - x.mean()) ** 2))
    if var <= 0.0:
        raise FitError("degenerate regressor: s_f is constant over the trace")
    k = float(np.sum((x - x.mean()) * (y - y.mean())) / var)
    b = float(y.mean() - k * x.mean())
    return LinearFit(k, b, r_squared(y, k * x + b), int(x.size))


def fit_linear(trace: EntropyTrace) -> LinearFit:
    """S_w against S_f over all samples of a trace."""
    return linear_fit_xy(trace.s_f, trace.column("s_w"))


@dataclass(frozen=True)
class SaturationFit:
    A: float
    omega: float
    r2: float
    residual_norm: float
    n_iterations: int
    window_end: float  # last fitted time

    def predict(self, t):
        return self.A * (1.0 - np.exp(-self.omega * np.asarray(t)))


def saturation_gradient(t, s, A: float, omega: float) -> np.ndarray:
    """J^T r for the residual r = s - A(1 - exp(-omega t)); zero at a
    stationary point of the squared-residual objective."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    e = np.exp(-omega * t)
    r = s - A * (1.0 - e)
    return np.array([float(np.dot(-(1.0 - e), r)),
                     float(np.dot(-A * t * e, r))])


def _plateau_end_index(times: np.ndarray, s: np.ndarray) -> int:
    """Index just past the first detected plateau, or len(s) without one.

    The running mean is taken over windows spanning 10% of the horizon; the
    plateau starts at the first window whose mean is within 1% of the
    settled (final-window) value. The fitted span runs from t = 0 through
    that certifying window, so the rise plus the plateau onset is fitted
    and the late free fluctuation is not.
    """
    n = len(s)
    w = max(2, n // 10)
    if n < 3 * w:
        return n
    kernel = np.ones(w) / w
    mu = np.convolve(s, kernel, mode="valid")  # mu[i] = mean(s[i:i+w])
    settled = mu[-1]
    scale = max(abs(settled), 1e-30)
    hits = np.nonzero(np.abs(mu - settled) <= 0.01 * scale)[0]
    if hits.size == 0:
        return n
    return min(n, int(hits[0]) + w)


def fit_saturation_xy(t, s, max_iter: int = 200,
                      rel_tol: float = 1e-10) -> SaturationFit:
    """Least squares of s ~ A (1 - exp(-omega t)) by damped Gauss-Newton.

    A starts from the late-time plateau mean and omega from a log-linear
    fit of (A - s)/A over the rise; both are then refined until the
    relative parameter change drops below rel_tol.
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if t.size < 10:
        raise ValidationError(
            f"need >= 10 samples for a saturation fit, got {t.size}")
    tail = s[(3 * t.size) // 4:]
    A = float(tail.mean())
    if A <= 0.0:
        raise FitError(f"saturation initializer failed: plateau mean {A!r} <= 0")
    frac = (A - s) / A
    rise = (frac > 1e-6) & (t > 0)
    if np.count_nonzero(rise) >= 2:
        tt = t[rise]
        omega = float(-np.dot(tt, np.log(frac[rise])) / np.dot(tt, tt))
    else:
        omega = 0.0
    if not np.isfinite(omega) or omega <= 0.0:
        omega = 2.0 / max(float(t[-1]), 1e-30)
    A0, w0 = A, omega

    def sse(a, w):
        r = s - a * (1.0 - np.exp(-w * t))
        return float(np.dot(r, r))

    current = sse(A, omega)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        e = np.exp(-omega * t)
        r = s - A * (1.0 - e)
        ja = -(1.0 - e)
        jw = -A * t * e
        g = np.array([np.dot(ja, r), np.dot(jw, r)])
        m = np.array([[np.dot(ja, ja), np.dot(ja, jw)],
                      [np.dot(ja, jw), np.dot(jw, jw)]])
        try:
            step = np.linalg.solve(m, -g)
        except np.linalg.LinAlgError as exc:
            raise FitError(f"saturation fit normal equations singular "
                           f"(initializers A={A0!r}, omega={w0!r})") from exc
        lam = 1.0
        while lam > 1e-14:
            a_new = A + lam * step[0]
            w_new = omega + lam * step[1]
            if w_new > 0.0 and sse(a_new, w_new) <= current:
                break
            lam *= 0.5
        else:
            break  # no downhill step left: stationary to machine precision
        change = max(abs(lam * step[0]) / max(abs(A), 1e-30),
                     abs(lam * step[1]) / max(abs(omega), 1e-30))
        A, omega, current = a_new, w_new, sse(a_new, w_new)
        if change < rel_tol:
            break
    # reaching max_iter is a legitimate stop (slow linear tail on noisy
    # data); n_iterations records it for the caller
    if not (np.isfinite(A) and np.isfinite(omega)):
        raise FitError(f"saturation fit diverged "
                       f"(initializers A={A0!r}, omega={w0!r})")
    if A <= 0.0 or omega <= 0.0:
        raise FitError(f"saturation fit left the physical region: "
                       f"A={A!r}, omega={omega!r}")
    A, omega = float(A), float(omega)
    fit_vals = A * (1.0 - np.exp(-omega * t))
    return SaturationFit(A, omega, r_squared(s, fit_vals),
                         float(np.linalg.norm(s - fit_vals)), iterations,
                         float(t[-1]))


def fit_saturation(trace: EntropyTrace, column: str = "s_f",
                   window: str = "auto") -> SaturationFit:
    """Saturation fit on a trace column, windowed from t = 0 to the first
    detected plateau (window="auto") or over the full horizon ("full")."""
    s = trace.column(column)
    if window == "auto":
        end = _plateau_end_index(trace.times, s)
    elif window == "full":
        end = len(s)
    else:
        raise ValidationError(f"unknown fit window {window!r}")
    return fit_saturation_xy(trace.times[:end], s[:end])


@dataclass(frozen=True)
class PeriodResult:
    """Outcome of the epsilon regression-period scan.

    ``armed_at`` is None when the trace never left the epsilon
    neighbourhood (not applicable), distinct from armed-but-never-returned
    (found = False with armed_at set).
    """

    found: bool
    T: float | None
    epsilon_at_T: float | None
    armed_at: float | None
    search_horizon: float

    @property
    def applicable(self) -> bool:
        return self.armed_at is not None


def detect_period_xy(times, s, eps: float = 0.2) -> PeriodResult:
    """Two-phase scan: arm at the first sample with s - s(0) >= eps, then
    report the first later sample with |s - s(0)| < eps."""
    times = np.asarray(times, dtype=float)
    s = np.asarray(s, dtype=float)
    if times.size == 0:
        raise ValidationError("empty trace")
    if abs(float(times[0])) > 1e-12:
        raise ValidationError("period scan requires the trace to start at t=0")
    horizon = float(times[-1])
    s0 = float(s[0])
    rise = np.nonzero(s - s0 >= eps)[0]
    if rise.size == 0:
        return PeriodResult(False, None, None, None, horizon)
    armed = int(rise[0])
    back = np.nonzero(np.abs(s[armed:] - s0) < eps)[0]
    if back.size == 0:
        return PeriodResult(False, None, None, float(times[armed]), horizon)
    hit = armed + int(back[0])
    return PeriodResult(True, float(times[hit]), float(s[hit] - s0),
                        float(times[armed]), horizon)


def detect_period(trace: EntropyTrace, column: str = "s_w",
                  eps: float = 0.2) -> PeriodResult:
    return detect_period_xy(trace.times, trace.column(column), eps)


class IncrementalPeriodDetector:
    """Streaming version of :func:`detect_period_xy` for early-exit scans.

    Feed samples in time order; ``update`` returns the PeriodResult as soon
    as the return fires, and ``finalize`` reports the not-found /
    not-applicable outcome at the end of the scan. Results are identical to
    the batch detector on the same samples.
    """

    def __init__(self, eps: float = 0.2):
        self.eps = float(eps)
        self.s0: float | None = None
        self.armed_at: float | None = None
        self.last_t = 0.0

    def update(self, t: float, s: float) -> PeriodResult | None:
        self.last_t = float(t)
        if self.s0 is None:
            self.s0 = float(s)
            return None
        if self.armed_at is None:
            if s - self.s0 >= self.eps:
                self.armed_at = float(t)
            return None
        if abs(s - self.s0) < self.eps:
            return PeriodResult(True, float(t), float(s - self.s0),
                                self.armed_at, float(t))
        return None

    def finalize(self, horizon: float | None = None) -> PeriodResult:
        return PeriodResult(False, None, None, self.armed_at,
                            float(self.last_t if horizon is None else horizon))
