"""Entropy time series and their CSV schema.

Files carry '#'-prefixed metadata, then a header row, then
`t,s_f,s_w,dropped_mass,error_bound` records (the last three columns are
empty when W entropy is disabled). Floats are written with repr, which
round-trips exactly, so identical runs produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

COLUMNS = ("t", "s_f", "s_w", "dropped_mass", "error_bound")
META_KEYS = ("n", "N", "shape", "J", "U", "frame", "window", "theta")


@dataclass(frozen=True)
class EntropyTrace:
    """Sampled S_f(t) and optionally S_w(t) for one run."""

    times: np.ndarray
    s_f: np.ndarray
    s_w: np.ndarray | None = None
    dropped_mass: np.ndarray | None = None
    error_bound: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.times.shape != self.s_f.shape:
            raise ValidationError("times and s_f lengths differ")
        for arr in (self.s_w, self.dropped_mass, self.error_bound):
            if arr is not None and arr.shape != self.times.shape:
                raise ValidationError("column lengths differ")
        if self.times.size and np.any(np.diff(self.times) <= 0):
            raise ValidationError("times must be strictly ascending")

    @property
    def has_w(self) -> bool:
        return self.s_w is not None

    def column(self, name: str) -> np.ndarray:
        if name == "s_f":
            return self.s_f
        if name == "s_w":
            if self.s_w is None:
                raise ValidationError("trace has no s_w column")
            return self.s_w
        raise ValidationError(f"unknown trace column {name!r}")


def format_trace(trace: EntropyTrace) -> str:
    meta = trace.metadata
    head = ",".join(f"{k}={meta.get(k, '')}" for k in META_KEYS)
    lines = [f"# {head}"]
    extra = {k: v for k, v in meta.items() if k not in META_KEYS}
    if extra:
        lines.append("# " + ",".join(f"{k}={v}" for k, v in sorted(extra.items())))
    lines.append(",".join(COLUMNS))
    empty = [""] * len(trace.times)
    cols = [
        [repr(float(v)) for v in trace.times],
        [repr(float(v)) for v in trace.s_f],
        [repr(float(v)) for v in trace.s_w] if trace.s_w is not None else empty,
        [repr(float(v)) for v in trace.dropped_mass]
        if trace.dropped_mass is not None else empty,
        [repr(float(v)) for v in trace.error_bound]
        if trace.error_bound is not None else empty,
    ]
    lines.extend(",".join(row) for row in zip(*cols))
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> EntropyTrace:
    metadata: dict = {}
    rows = []
    header_seen = False
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln:
            continue
        if ln.startswith("#"):
            for item in ln[1:].strip().split(","):
                key, _, val = item.partition("=")
                metadata[key.strip()] = val.strip()
            continue
        if not header_seen:
            if tuple(ln.split(",")) != COLUMNS:
                raise ValidationError(
                    f"unexpected trace header {ln!r}; expected "
                    f"{','.join(COLUMNS)}")
            header_seen = True
            continue
        parts = ln.split(",")
        if len(parts) != len(COLUMNS):
            raise ValidationError(f"malformed trace row {ln!r}")
        rows.append(parts)
    if not header_seen:
        raise ValidationError("trace file has no column header")
    times = np.array([float(r[0]) for r in rows])
    s_f = np.array([float(r[1]) for r in rows])

    def opt(idx):
        vals = [r[idx] for r in rows]
        if all(v == "" for v in vals):
            return None
        try:
            return np.array([float(v) for v in vals])
        except ValueError as exc:
            raise ValidationError(
                f"column {COLUMNS[idx]!r} holds non-numeric data: {exc}") from exc

    return EntropyTrace(times, s_f, opt(2), opt(3), opt(4), metadata)


def write_trace(path, trace: EntropyTrace) -> None:
    from .output import atomic_write
    atomic_write(path, format_trace(trace))


def read_trace(path) -> EntropyTrace:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh.read())
