"""Pure-numpy joint-cell entropy backend.

Enumerates per-site cell tuples with the leading sites walked by a Python
recursion and the trailing sites expanded as one vectorized block. Subtrees
whose exact remaining mass falls below theta are dropped and accounted; with
theta = 0 this is plain full enumeration, which is the brute-force oracle
the compiled backend is validated against.

Shared array conventions (prepared by :mod:`hcboson.entropy.backend`):
  bits  (dim, n) uint8   site occupation of each Fock state
  d0/d1 (M,)     float   per-cell mass of the empty/occupied level
  rem   (n+1, dim) float rem[k, m] = prod_{k' >= k} sum(d_{bits[m,k']})
  order (M,)     int     cell visit order (descending per-cell mass)
"""

from __future__ import annotations

import numpy as np

_BLOCK_LIMIT = 1 << 17  # largest vectorized tail block (tuples)


def _tail_length(M: int, n_sites: int) -> int:
    tail = 1
    while tail < n_sites and M ** (tail + 1) <= _BLOCK_LIMIT:
        tail += 1
    return tail


def _tail_block(sel: np.ndarray, split: int, order: np.ndarray) -> np.ndarray:
    """(dim, M^tail) per-state product over sites split..n-1, cells in
    `order` on every axis."""
    dim = sel.shape[0]
    block = np.ones((dim, 1), dtype=sel.dtype)
    for k in range(split, sel.shape[1]):
        site = sel[:, k, :][:, order]
        block = (block[:, :, None] * site[:, None, :]).reshape(dim, -1)
    return block


def fact_entropy(q, bits, d0, d1, rem, order, theta):
    """Factorized-probability joint entropy. Returns (S, dropped, nodes)."""
    dim, n = bits.shape
    sel = np.where(bits[:, :, None] == 1, d1[None, None, :], d0[None, None, :])
    split = n - _tail_length(d0.size, n)
    tail = _tail_block(sel, split, order)
    acc = {"S": 0.0, "dropped": 0.0, "nodes": 0}

    def leaf(w):
        p = w @ tail
        acc["nodes"] += p.size
        pos = p > 0.0
        if np.any(pos):
            pp = p[pos]
            acc["S"] -= float(np.sum(pp * np.log(pp)))

    def walk(k, w):
        if k == split:
            leaf(w)
            return
        for c in order:
            w2 = w * sel[:, k, c]
            acc["nodes"] += 1
            bound = float(w2 @ rem[k + 1])
            if bound <= 0.0:
                continue
            if bound < theta:
                acc["dropped"] += bound
                continue
            walk(k + 1, w2)

    walk(0, np.array(q, dtype=np.float64))
    return acc["S"], acc["dropped"], acc["nodes"]


def exact_entropy(lam, bits, C0, C1, rem2, order, theta):
    """Cross-term-preserving joint entropy from cell amplitudes.

    The subtree bound is Cauchy-Schwarz: total mass below a node is at most
    dim * sum_m |a_m|^2 * rem2[k, m]. Returns (S, dropped, nodes).
    """
    dim, n = bits.shape
    sel = np.where(bits[:, :, None] == 1, C1[None, None, :], C0[None, None, :])
    split = n - _tail_length(C0.size, n)
    tail = _tail_block(sel, split, order)
    acc = {"S": 0.0, "dropped": 0.0, "nodes": 0}

    def leaf(a):
        p = np.abs(a @ tail) ** 2
        acc["nodes"] += p.size
        pos = p > 0.0
        if np.any(pos):
            pp = p[pos]
            acc["S"] -= float(np.sum(pp * np.log(pp)))

    def walk(k, a):
        if k == split:
            leaf(a)
            return
        for c in order:
            a2 = a * sel[:, k, c]
            acc["nodes"] += 1
            bound = dim * float((np.abs(a2) ** 2) @ rem2[k + 1])
            if bound <= 0.0:
                continue
            if bound < theta:
                acc["dropped"] += bound
                continue
            walk(k + 1, a2)

    walk(0, np.array(lam, dtype=np.complex128))
    return acc["S"], acc["dropped"], acc["nodes"]
