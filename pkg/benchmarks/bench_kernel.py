"""Compare the compiled and numpy kernels on circuit execution and adjoint gradients.

Usage: python benchmarks/bench_kernel.py [--repeat N]

Both kernel modules are imported directly, so one process times both.
"""
import argparse
import timeit

import numpy as np

from symprep import _fallback
from symprep.ansatz_a import build_general
from symprep.core_sim import CompiledCircuit, compile_ops

try:
    from symprep import _kernel
except ImportError:
    _kernel = None

CASES = [(4, 2), (6, 3), (8, 4), (10, 5)]


def _time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_run(n, m, impl, repeat):
    c = build_general(n, m)
    x = np.random.default_rng(0).uniform(0, 2 * np.pi, c.n_free)
    ops = compile_ops(c, x)

    def go():
        buf = np.zeros(1 << n, dtype=complex)
        buf[0] = 1.0
        impl.apply_ops(buf, *ops)
    return _time(go, repeat)


def bench_grad(n, m, impl, repeat):
    c = build_general(n, m)
    cc = CompiledCircuit(c)
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 2 * np.pi, c.n_free)
    t = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    t /= np.linalg.norm(t)
    v = cc.values(x)
    mats, dmats = cc.matrices(v), cc.dmatrices(v)

    def go():
        psi = cc.run(x)
        lam = t.astype(complex).copy()
        grad = np.zeros(c.n_free, dtype=complex)
        impl.adjoint_sweep(psi, lam, cc.cm, cc.cv, cc.fl, mats, dmats,
                           cc.dgate, cc.dslot, cc.dscale, grad)
    return _time(go, repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernel is None:
        print("compiled kernel not built; only the numpy fallback is available")
    print(f"{'case':>8} {'op':>5} {'gates':>6} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8}")
    for n, m in CASES:
        gates = len(build_general(n, m).gates)
        for name, fn in (("run", bench_run), ("grad", bench_grad)):
            tp = fn(n, m, _fallback, args.repeat) * 1e3
            if _kernel is None:
                print(f"{f'({n},{m})':>8} {name:>5} {gates:>6} {tp:12.3f} {'-':>12} {'-':>8}")
                continue
            tc = fn(n, m, _kernel, args.repeat) * 1e3
            print(f"{f'({n},{m})':>8} {name:>5} {gates:>6} {tp:12.3f} {tc:12.3f} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
