#!/usr/bin/env python3
"""High-precision oracle for superstable logistic parameters R_1..R_12.

Independent of the package: mpmath bisection at 60 significant digits on
g_m(r) = f_r^(2^(m-1))(1/2) - 1/2 inside (R_(m-1), 3.5699457].  Run once and
freeze the printed values into the test suite.
"""

import mpmath as mp

mp.mp.dps = 60

GUARD = mp.mpf("3.5699457")


def g(r, n):
    x = mp.mpf("0.5")
    for _ in range(n):
        x = r * x * (1 - x)
    return x - mp.mpf("0.5")


def find_root(lo, hi, n, scan=512):
    vals = []
    step = (hi - lo) / (scan + 1)
    prev_r = lo + step
    prev_v = g(prev_r, n)
    for i in range(2, scan + 2):
        r = lo + i * step
        v = g(r, n)
        if prev_v * v < 0:
            a, b, fa = prev_r, r, prev_v
            for _ in range(250):
                mid = (a + b) / 2
                fm = g(mid, n)
                if fa * fm < 0:
                    b = mid
                else:
                    a, fa = mid, fm
                if b - a < mp.mpf("1e-40"):
                    break
            return (a + b) / 2
        prev_r, prev_v = r, v
    raise RuntimeError("no sign change")


def main():
    rs = [mp.mpf(2)]
    for m in range(2, 13):
        root = find_root(rs[-1], GUARD, 2 ** (m - 1))
        rs.append(root)
        print(f"R_{m:<2d} = {mp.nstr(root, 30)}")
    print()
    print("exact check: R_2 - (1+sqrt(5)) =",
          mp.nstr(rs[1] - (1 + mp.sqrt(5)), 5))
    print()
    for m in range(2, len(rs)):
        if m + 1 <= len(rs):
            delta = (rs[m - 1] - rs[m - 2]) / (rs[m] - rs[m - 1])
            print(f"delta_{m:<2d} = {mp.nstr(delta, 20)}")


if __name__ == "__main__":
    main()
