#!/usr/bin/env python3
"""Benchmark: compiled DFS kernel vs pure-numpy enumeration backend.

Runs the joint-cell entropy of evolved states across window sizes and
lattice sizes, for both probability formulas, and prints a timing table.
The numpy backend vectorizes whole tail blocks, so it wins when the window
is small and pruning is ineffective; the compiled depth-first kernel wins
once pruning bites (larger windows / concentrated states).

Usage: python benchmarks/bench_backends.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from hcboson import dynamics as dyn
from hcboson import entropy, fock, lattice, wannier
from hcboson.entropy import backend as be


def evolved(n, N, t):
    basis = fock.enumerate_basis(n, N)
    H = fock.build_hamiltonian(lattice.build_chain(n), basis, 1.0, 0.0)
    prop = dyn.make_propagator(H)
    return dyn.evolve(prop, dyn.basis_state(basis, list(range(N))), t)


def bench(evaluator, state, repeats):
    best = np.inf
    value = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        value = evaluator(state)
        best = min(best, time.perf_counter() - t0)
    return best, value


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if not be.HAVE_COMPILED:
        print("compiled kernel not built; run "
              "`python setup.py build_ext --inplace` first")
        return

    frames = {
        "M=9": wannier.build_frame(wx=1, wk=1, leak_tol=0.3),
        "M=25": wannier.build_frame(leak_tol=0.15),
    }
    cases = [
        ("n=4 N=2", evolved(4, 2, 9.0)),
        ("n=5 N=2", evolved(5, 2, 9.0)),
        ("n=6 N=3", evolved(6, 3, 9.0)),
        ("n=6 N=1", evolved(6, 1, 9.0)),
    ]
    hdr = (f"{'case':10s} {'frame':6s} {'method':11s} "
           f"{'compiled':>12s} {'reference':>12s} {'speedup':>8s}")
    print(hdr)
    print("-" * len(hdr))
    for label, state in cases:
        for fname, frame in frames.items():
            if frame.n_cells ** state.basis.n_sites > 5e8:
                continue
            for method in ("factorized", "exact"):
                evs = {
                    bk: entropy.WEntropyEvaluator(
                        state.basis, frame, method, 1e-14, bk)
                    for bk in ("compiled", "reference")
                }
                tc, vc = bench(evs["compiled"], state, args.repeats)
                tr, vr = bench(evs["reference"], state, args.repeats)
                agree = abs(vc.entropy - vr.entropy)
                assert agree < vc.error_bound + vr.error_bound + 1e-9, agree
                print(f"{label:10s} {fname:6s} {method:11s} "
                      f"{tc * 1e3:10.2f}ms {tr * 1e3:10.2f}ms "
                      f"{tr / tc:7.2f}x")


if __name__ == "__main__":
    main()
