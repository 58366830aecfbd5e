"""Lattice graphs whose nearest-neighbour pairs drive the Hamiltonian sums.

Sites are 0-based; grids are row-major with open boundaries, rings are the
only periodic shape. Graphs are immutable and connectivity-checked at
construction, so they can be shared freely between workers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConnectivityError, ValidationError

Edge = tuple[int, int]


@dataclass(frozen=True)
class LatticeGraph:
    """An undirected, connected graph of lattice sites.

    ``edges`` is canonical: each pair is (i, j) with i < j, deduplicated and
    sorted, so equal graphs serialize identically regardless of input order.
    """

    n_sites: int
    edges: tuple[Edge, ...]
    shape_tag: str

    def degree(self, site: int) -> int:
        return sum(1 for i, j in self.edges if site in (i, j))

    def degrees(self) -> list[int]:
        deg = [0] * self.n_sites
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def to_text(self) -> str:
        """Plain-text record: first line n_sites, then `i j` per edge."""
        lines = [str(self.n_sites)]
        lines.extend(f"{i} {j}" for i, j in self.edges)
        return "\n".join(lines) + "\n"


def _normalize_edges(n_sites: int, pairs) -> tuple[Edge, ...]:
    seen = set()
    for a, b in pairs:
        a, b = int(a), int(b)
        if a == b:
            raise ValidationError(f"self-loop on site {a}")
        if not (0 <= a < n_sites and 0 <= b < n_sites):
            raise ValidationError(
                f"edge ({a}, {b}) references a site outside 0..{n_sites - 1}")
        seen.add((a, b) if a < b else (b, a))
    return tuple(sorted(seen))


def _check_connected(n_sites: int, edges: tuple[Edge, ...]) -> None:
    if n_sites == 1:
        return
    adj = [[] for _ in range(n_sites)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    if len(seen) != n_sites:
        missing = sorted(set(range(n_sites)) - seen)
        raise ConnectivityError(
            f"graph is disconnected; sites {missing} unreachable from site 0")


def build_chain(n: int) -> LatticeGraph:
    """Open chain: edges (i, i+1)."""
    if n < 2:
        raise ValidationError(f"chain needs at least 2 sites, got {n}")
    edges = tuple((i, i + 1) for i in range(n - 1))
    return LatticeGraph(n, edges, "chain")


def build_ring(n: int) -> LatticeGraph:
    """Closed ring: chain plus the (0, n-1) edge."""
    if n < 3:
        raise ValidationError(f"ring needs at least 3 sites, got {n}")
    edges = tuple(sorted([(i, i + 1) for i in range(n - 1)] + [(0, n - 1)]))
    return LatticeGraph(n, edges, "ring")


def build_grid(rows: int, cols: int) -> LatticeGraph:
    """Open-boundary rectangular grid, site index = row*cols + col."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise ValidationError(f"grid {rows}x{cols} is degenerate")
    edges = []
    for r in range(rows):
        for c in range(cols):
            s = r * cols + c
            if c + 1 < cols:
                edges.append((s, s + 1))
            if r + 1 < rows:
                edges.append((s, s + cols))
    return LatticeGraph(rows * cols, tuple(sorted(edges)), f"grid({rows},{cols})")


def build_custom(n: int, pairs) -> LatticeGraph:
    """Arbitrary connected graph from an edge list (normalized, deduplicated)."""
    if n < 2:
        raise ValidationError(f"custom graph needs at least 2 sites, got {n}")
    edges = _normalize_edges(n, pairs)
    _check_connected(n, edges)
    return LatticeGraph(n, edges, "custom")


def from_text(text: str) -> LatticeGraph:
    """Inverse of :meth:`LatticeGraph.to_text` (shape tag becomes 'custom')."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError("empty graph record")
    n = int(lines[0])
    pairs = []
    for ln in lines[1:]:
        a, b = ln.split()
        pairs.append((int(a), int(b)))
    return build_custom(n, pairs)
