"""How the section modulus probe for A_n = S^n + (S^n)* depends on the window.

The section of A_n of size N = m*n splits into n path graphs of length m, and
e_0 sits at the end of one of them, so the probe value depends on m only:

    <|P_N A_n P_N| e_0, e_0> = (2/(m+1)) * sum_j |2 cos(pi j/(m+1))| sin(pi j/(m+1))**2

which tends to 8/(3 pi) at rate O(1/m). The table compares the section
eigendecomposition with this closed form and shows the drift between windows
m*n and 2m*n.

    python3 scripts/probe_window_drift.py --n 3 --max-m 256
"""

import argparse

import numpy as np

from opseq import band as bd
from opseq.convergence import section_modulus_probe


def path_end_value(m: int) -> float:
    j = np.arange(1, m + 1)
    theta = np.pi * j / (m + 1)
    return float(2.0 / (m + 1) * np.sum(np.abs(2 * np.cos(theta)) * np.sin(theta) ** 2))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=3, help="shift power")
    parser.add_argument("--max-m", type=int, default=128, help="largest window multiplier (section compute stops at 64)")
    args = parser.parse_args()

    a = bd.shift_sum(args.n)
    limit = 8 / (3 * np.pi)
    print(f"n = {args.n}, limit 8/(3 pi) = {limit:.9f}")
    print(f"{'m':>5} {'window':>7} {'section':>12} {'closed form':>12} {'drift to 2m':>12}")
    m = 4
    while m <= args.max_m:
        closed = path_end_value(m)
        drift = abs(path_end_value(2 * m) - closed)
        if m <= 64:
            section = f"{section_modulus_probe(a, m * args.n, bd.basis(0)).value:12.9f}"
        else:
            section = f"{'-':>12}"
        print(f"{m:>5} {m * args.n:>7} {section} {closed:12.9f} {drift:12.6f}")
        m *= 2


if __name__ == "__main__":
    main()
