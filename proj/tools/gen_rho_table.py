#!/usr/bin/env python3
"""Regenerate kRhoTable in include/nafd/quant.hpp.

rho(B) = min over step d of E[(x - Q_d(x))^2], x ~ N(0, 1), where Q_d is the
mid-rise uniform quantizer with 2^B levels (i + 1/2) d, i = -2^(B-1) .. 2^(B-1)-1,
and the two outer cells extend to infinity.

Cell moments use the closed-form Gaussian partial moments. In double precision
these cancel badly once cells are narrow (B >= 12), so everything runs in
mpmath at 40 digits.  Takes a few minutes for B up to 16.
"""
import argparse
import mpmath as mp

mp.mp.dps = 40


def mse(bits, d):
    half = 2 ** (bits - 1)
    total = mp.mpf(0)
    for i in range(half):  # positive side, doubled by symmetry
        a = i * d
        b = (i + 1) * d if i < half - 1 else mp.inf
        c = (i + mp.mpf(1) / 2) * d
        p = mp.ncdf(b) - mp.ncdf(a)
        pa = mp.npdf(a)
        pb = mp.mpf(0) if b == mp.inf else mp.npdf(b)
        bpb = mp.mpf(0) if b == mp.inf else b * pb
        m2 = p - (bpb - a * pa)
        m1 = pa - pb
        total += m2 - 2 * c * m1 + c * c * p
    return 2 * total


def optimum(bits):
    g = mp.mpf(8) / 2 ** bits
    lo, hi = g / 5, 5 * g
    r = (mp.sqrt(5) - 1) / 2
    x1, x2 = hi - r * (hi - lo), lo + r * (hi - lo)
    f1, f2 = mse(bits, x1), mse(bits, x2)
    while hi - lo > mp.mpf("1e-10") * g:
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - r * (hi - lo)
            f1 = mse(bits, x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + r * (hi - lo)
            f2 = mse(bits, x2)
    return min(f1, f2), (lo + hi) / 2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-bits", type=int, default=16)
    args = ap.parse_args()
    vals = []
    for b in range(1, args.max_bits + 1):
        rho, step = optimum(b)
        vals.append(rho)
        print(f"// B={b:2d} step={mp.nstr(step, 12)} rho={mp.nstr(rho, 20)}", flush=True)
    body = ",\n    ".join(mp.nstr(v, 17, min_fixed=1, max_fixed=0) for v in vals)
    print(f"inline constexpr std::array<double, {len(vals)}> kRhoTable = {{\n    {body}}};")


if __name__ == "__main__":
    main()
