"""Regenerate tests/oracle_values.py from first principles (mpmath, itertools).

Nothing here imports geoperm. Run from the repository root:

    python3 tests/oracles/make_oracles.py > tests/oracle_values.py
"""

import itertools
import math
import random
from fractions import Fraction

import mpmath as mp

mp.mp.dps = 60


def t_oracle(y, g):
    y = [mp.mpf(repr(v)) for v in y]
    a = [v for v, b in zip(y, g) if b == 0]
    b = [v for v, b in zip(y, g) if b == 1]
    n1, n2 = len(a), len(b)
    m1, m2 = sum(a) / n1, sum(b) / n2
    ss = sum((v - m1) ** 2 for v in a) + sum((v - m2) ** 2 for v in b)
    df = n1 + n2 - 2
    s2 = ss / df
    t = (m2 - m1) / mp.sqrt(s2 * (mp.mpf(1) / n1 + mp.mpf(1) / n2))
    # two-sided tail: I_{df/(df+t^2)}(df/2, 1/2)
    x = df / (df + t * t)
    p = mp.betainc(mp.mpf(df) / 2, mp.mpf(1) / 2, 0, x, regularized=True)
    return float(t), float(p)


def chi2_oracle(y, g):
    n = len(y)
    cells = [[0, 0], [0, 0]]
    for a, b in zip(y, g):
        cells[int(a)][int(b)] += 1
    rows = [sum(r) for r in cells]
    cols = [cells[0][j] + cells[1][j] for j in range(2)]
    stat = mp.mpf(0)
    for i in range(2):
        for j in range(2):
            e = mp.mpf(rows[i]) * cols[j] / n
            stat += (cells[i][j] - e) ** 2 / e
    p = mp.erfc(mp.sqrt(stat / 2))
    return float(stat), float(p)


def main():
    rng = random.Random(20240611)
    t_cases = [([1, 2, 3, 4, 5, 6], [0, 0, 0, 1, 1, 1])]
    for n, shift in ((8, 0.5), (10, 1.0), (12, 0.0), (20, 2.0), (30, 3.5), (40, 0.3), (60, 6.0), (16, 1.5), (24, 8.0)):
        g = [0] * (n // 2) + [1] * (n - n // 2)
        rng.shuffle(g)
        y = [round(rng.gauss(0, 1) + shift * b, 6) for b in g]
        t_cases.append((y, g))
    chi_cases = [([0, 0, 0, 0, 1, 1, 1, 1], [0, 0, 0, 0, 1, 1, 1, 1])]
    for n, flips in ((8, 1), (10, 2), (12, 0), (12, 3), (20, 4), (30, 2), (40, 10), (60, 5), (60, 25)):
        y = [0] * (n // 2) + [1] * (n - n // 2)
        rng.shuffle(y)
        g = list(y)
        for i in rng.sample(range(n), flips):
            g[i] = 1 - g[i]
        if len(set(g)) == 1:
            g[0] = 1 - g[0]
        chi_cases.append((y, g))

    print('"""Reference values generated by tests/oracles/make_oracles.py (mpmath, 60 digits)."""')
    print()
    print("T_CASES = [")
    for y, g in t_cases:
        t, p = t_oracle(y, g)
        print(f"    ({y!r}, {g!r}, {t!r}, {p!r}),")
    print("]")
    print()
    print("CHI2_CASES = [")
    for y, g in chi_cases:
        s, p = chi2_oracle(y, g)
        print(f"    ({y!r}, {g!r}, {s!r}, {p!r}),")
    print("]")
    print()

    # exhaustive n=12 balanced binary reference: 462 partitions, chain markers
    n, t = 12, 6
    rng2 = random.Random(7)
    markers = []
    prof = [rng2.randint(0, 1) for _ in range(n)]
    for _ in range(30):
        markers.append(tuple(prof))
        prof = [b ^ (rng2.random() < 0.15) for b in prof]
    y = [0] * 6 + [1] * 6
    rng2.shuffle(y)
    y = tuple(y)

    def stat(lab, m):
        return chi2_oracle(lab, m)[0]

    obs = max(stat(y, m) for m in markers if len(set(m)) > 1)
    hit = total = 0
    for ones in itertools.combinations(range(1, n), t):
        lab = [0] * n
        for i in ones:
            lab[i] = 1
        total += 1
        if max(stat(lab, m) for m in markers if len(set(m)) > 1) >= obs * (1 - mp.mpf(10) ** -12):
            hit += 1
    print(f"EXHAUSTIVE_N12_MARKERS = {markers!r}")
    print(f"EXHAUSTIVE_N12_TRAIT = {y!r}")
    print(f"EXHAUSTIVE_N12_P = ({hit}, {total})")
    print()

    # exact radial fractions at n=12 for a balanced binary trait and a fixed cutoff
    alpha = 0.05
    yb = (0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0)
    center = yb
    fracs = []
    for r in range(0, 7):
        ok = cnt = 0
        for flips in itertools.combinations(range(n), r):
            m = list(center)
            for i in flips:
                m[i] ^= 1
            cnt += 1
            if len(set(m)) > 1 and chi2_oracle(yb, m)[1] <= alpha * (1 + 1e-9):
                ok += 1
        fracs.append((ok, cnt))
    print(f"RADIAL_N12_TRAIT = {yb!r}")
    print(f"RADIAL_N12_ALPHA = {alpha!r}")
    print(f"RADIAL_N12_FRACTIONS = {fracs!r}")


if __name__ == "__main__":
    main()
