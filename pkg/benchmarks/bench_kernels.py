"""Time the compiled Pauli kernels against the numpy fallback.

    python benchmarks/bench_kernels.py --qubits 12 --batch 8
"""
import argparse
import timeit

import numpy as np

from excitrace import _kernels_py
from excitrace.hamiltonian import build_heisenberg, build_hubbard, word_masks

try:
    from excitrace import _kernels
except ImportError:
    _kernels = None


def best_ms(fn, repeat, number):
    return 1e3 * min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--qubits", type=int, default=12)
    parser.add_argument("--batch", type=int, default=8)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--number", type=int, default=10)
    args = parser.parse_args(argv)
    if _kernels is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(0)
    n, dim = args.qubits, 2 ** args.qubits
    psi = rng.standard_normal((args.batch, dim)) + 1j * rng.standard_normal((args.batch, dim))
    lam = rng.standard_normal((args.batch, dim)) + 1j * rng.standard_normal((args.batch, dim))
    a = np.full(args.batch, np.cos(0.3) + 0j)
    c = np.full(args.batch, 1j * np.sin(0.3))
    flip, sign, phase = word_masks("XY" + "Z" * (n - 2))
    operators = {"heisenberg": build_heisenberg(n, 1.0, 0.9, 0.8, 0.05)}
    if n % 2 == 0:
        operators["hubbard"] = build_hubbard(n // 2, 1)

    print(f"{'kernel':<24}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    cases = []
    for name, h in operators.items():
        flips, diags = h.compiled()
        cases.append((f"apply {name}", lambda m, f=flips, d=diags: m.apply_groups(f, d, psi)))
    cases.append(("pauli_rotate", lambda m: m.pauli_rotate(psi.copy(), flip, sign, phase, a, c)))
    cases.append(("pauli_expect", lambda m: m.pauli_expect(lam, psi, flip, sign, phase)))
    for label, call in cases:
        slow = best_ms(lambda: call(_kernels_py), args.repeat, args.number)
        fast = best_ms(lambda: call(_kernels), args.repeat, args.number)
        print(f"{label:<24}{slow:>12.3f}{fast:>12.3f}{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
