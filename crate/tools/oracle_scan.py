"""Brute-force oracle scan of the corpus with MPFR (gmpy2).

For each function, scans grids of binary64 inputs around the features where
rounding error is expected, evaluates the routine in binary64 (same op order
as the Rust corpus) and with MPFR, and reports the largest relative error per
window plus the sub-window where it exceeds each threshold.

usage: python3 tools/oracle_scan.py [points_per_function]
       python3 tools/oracle_scan.py --regions
"""

import math
import sys

import gmpy2
from gmpy2 import mpfr

BASE_BITS = 256
MAX_BITS = 8192


def hp_eval(fn, xs):
    """MPFR value of fn at exact doubles xs, doubling precision until stable."""
    bits = BASE_BITS
    prev = None
    while True:
        with gmpy2.context(gmpy2.get_context(), precision=bits):
            val = fn(*[mpfr(x) for x in xs])
        if prev is not None and val != 0 and abs(prev - val) <= abs(val) * mpfr(2) ** -80:
            return val
        if bits >= MAX_BITS:
            return val
        prev = val
        bits *= 2


def rel_err(d, hp):
    with gmpy2.context(gmpy2.get_context(), precision=MAX_BITS):
        if hp == 0:
            return float(abs(mpfr(d)))
        return float(abs((mpfr(d) - hp) / hp))


FUNCS = {
    "f1": (lambda x: math.sin(x) - 0.4, lambda x: gmpy2.sin(x) - mpfr("0.4")),
    "f2": (lambda x: (1.0 - math.cos(x)) / (x * x), lambda x: (1 - gmpy2.cos(x)) / (x * x)),
    "f3": (lambda x: (math.exp(x) - 1.0) - x, lambda x: (gmpy2.exp(x) - 1) - x),
    "f4": (lambda x: math.log(x) / (x - 1.0), lambda x: gmpy2.log(x) / (x - 1)),
    "f5": (lambda x: ((x * x) * x - 2.0 * x) - 5.0, lambda x: ((x * x) * x - 2 * x) - 5),
    "f8": (
        lambda x: math.sin(x) / (x * x) - math.cos(x) / x,
        lambda x: gmpy2.sin(x) / (x * x) - gmpy2.cos(x) / x,
    ),
}

ASIN04 = 0.41151684606748806
F5_ROOT = 2.0945514815423265
J1_ZERO = 4.493409457909064

# (function, label, lo, hi, spacing) with spacing "lin" or "log"
WINDOWS = [
    ("f1", "asin(0.4)", ASIN04 - 1e-13, ASIN04 + 1e-13, "lin"),
    ("f1", "pi-asin(0.4)", math.pi - ASIN04 - 1e-13, math.pi - ASIN04 + 1e-13, "lin"),
    ("f1", "broad", 1e-3, 10.0, "log"),
    ("f2", "small", 1e-12, 1e-3, "log"),
    ("f2", "2pi", 2 * math.pi - 1e-6, 2 * math.pi + 1e-6, "lin"),
    ("f2", "broad", 1e-3, 1e6, "log"),
    ("f3", "small+", 1e-12, 1e-3, "log"),
    ("f3", "small-", -1e-3, -1e-12, "log"),
    ("f3", "broad", 1e-3, 700.0, "log"),
    ("f4", "near1", 1 - 1e-6, 1 + 1e-6, "lin"),
    ("f4", "broad", 1e-300, 1e300, "log"),
    ("f5", "root", F5_ROOT - 1e-13, F5_ROOT + 1e-13, "lin"),
    ("f5", "broad", 1e-3, 1e3, "log"),
    ("f8", "small", 1e-12, 1e-3, "log"),
    ("f8", "j1zero", J1_ZERO - 1e-12, J1_ZERO + 1e-12, "lin"),
    ("f8", "broad", 1e-3, 1e6, "log"),
]


# witness regions frozen into the corpus: (function, lo, hi, error_scale)
REGIONS = [
    ("f1", 0.41151684606744, 0.41151684606754, 1e-3),
    ("f1", 2.73007580752227, 2.73007580752235, 1e-3),
    ("f2", 1e-8, 3e-7, 1e-3),
    ("f2", 6.283185, 6.2831856, 1e-3),
    ("f3", 1e-9, 4e-7, 1e-3),
    ("f3", -2.9e-7, -1e-9, 1e-3),
    ("f5", 2.09455148154223, 2.09455148154242, 1e-3),
    ("f8", 1e-9, 7.8e-7, 1e-3),
    ("f8", 4.49340945790901, 4.49340945790909, 1e-3),
]


def region_grid(lo, hi, n=1000):
    """Log grid when the region spans more than two decades, else linear."""
    same_sign = (lo > 0) == (hi > 0)
    if same_sign and max(abs(lo), abs(hi)) / min(abs(lo), abs(hi)) > 100:
        return grid(lo, hi, n, "log")
    return grid(lo, hi, n, "lin")


def grid(lo, hi, n, spacing):
    if spacing == "log":
        sign = -1.0 if hi < 0 else 1.0
        a, b = sorted((abs(lo), abs(hi)))
        la, lb = math.log(a), math.log(b)
        return [sign * math.exp(la + (lb - la) * i / (n - 1)) for i in range(n)]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def scan(fid, lo, hi, n, spacing):
    d_fn, hp_fn = FUNCS[fid]
    rows = []
    for x in grid(lo, hi, n, spacing):
        try:
            d = d_fn(x)
        except (ValueError, ZeroDivisionError):
            continue
        if not math.isfinite(d):
            continue
        rows.append((x, rel_err(d, hp_eval(hp_fn, [x]))))
    return rows


def check_regions():
    for fid, lo, hi, scale in REGIONS:
        d_fn, hp_fn = FUNCS[fid]
        errs = [rel_err(d_fn(x), hp_eval(hp_fn, [x])) for x in region_grid(lo, hi)]
        hits = sum(e > scale for e in errs)
        print(f"{fid} [{lo!r}, {hi!r}] max_err={max(errs):.3e} above {scale:g}: {hits}/1000")


def main():
    if sys.argv[1:] == ["--regions"]:
        check_regions()
        return
    per_function = int(sys.argv[1]) if len(sys.argv) > 1 else 1_000_000
    counts = {}
    for fid, *_ in WINDOWS:
        counts[fid] = counts.get(fid, 0) + 1
    for fid, label, lo, hi, spacing in WINDOWS:
        n = per_function // counts[fid]
        rows = scan(fid, lo, hi, n, spacing)
        worst = max(rows, key=lambda r: r[1])
        print(f"{fid} {label:14s} n={len(rows)} max_err={worst[1]:.3e} at x={worst[0]!r}")
        for thr in (1e-3, 1e-6):
            hit = [x for x, e in rows if e > thr]
            if hit:
                print(f"    err>{thr:g}: {len(hit)} points in [{min(hit)!r}, {max(hit)!r}]")


if __name__ == "__main__":
    main()
