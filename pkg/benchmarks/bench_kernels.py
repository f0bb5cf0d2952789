"""Compare the compiled and numpy kernel backends.

Run ``python benchmarks/bench_kernels.py [--json out.json]``. Each kernel is
timed with :mod:`timeit` on identical inputs; results of the two backends
are also compared so a speedup never hides a discrepancy.
"""
from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from cmpairs._backend import available, load
from cmpairs.elliptic import Lattice


def _cases(lat, rng):
    z = rng.uniform(-3, 3, 512) + 1j * rng.uniform(-3, 3, 512)
    out = {"wp_family (512 points)": lambda k: k.wp_family(z, lat.params, 3),
           "zeta_vals (512 points)": lambda k: k.zeta_vals(z, lat.params),
           "sigma_parts (512 points)": lambda k: k.sigma_parts(z, lat.params)}
    for n in (6, 24):
        x = rng.uniform(0, 2, n) + 1j * rng.uniform(0, 2, n)
        p = rng.normal(size=n) + 1j * rng.normal(size=n)
        out[f"cm_rhs t3 (N={n})"] = (lambda k, x=x, p=p: k.cm_rhs(x, p, 3, lat.params))
        out[f"bkp_rhs (n={n})"] = (lambda k, x=x, p=p: k.bkp_rhs(x, p, lat.params))
    return out


def _flat(res):
    if isinstance(res, tuple):
        return np.concatenate([np.ravel(np.asarray(r, dtype=np.complex128)) for r in res])
    return np.ravel(np.asarray(res, dtype=np.complex128))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="write timings to this file")
    args = ap.parse_args(argv)

    lat = Lattice.square()
    cases = _cases(lat, np.random.default_rng(0))
    backends = {name: load(name) for name in available()}
    rows = []
    for label, fn in cases.items():
        row = {"case": label}
        ref = None
        for name, k in backends.items():
            number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(k), number=1), 1e-7)))
            best = min(timeit.repeat(lambda: fn(k), number=number, repeat=args.repeat)) / number
            row[name] = best
            val = _flat(fn(k))
            if ref is None:
                ref = val
            else:
                ok = np.isfinite(ref) & np.isfinite(val)
                row["max_rel_diff"] = float((np.abs(ref[ok] - val[ok]) / np.maximum(np.abs(ref[ok]), 1.0)).max())
        rows.append(row)

    names = list(backends)
    print(f"{'kernel':<26}" + "".join(f"{n:>14}" for n in names)
          + ("     speedup    max rel diff" if len(names) == 2 else ""))
    for row in rows:
        line = f"{row['case']:<26}" + "".join(f"{row[n] * 1e6:>11.1f} us" for n in names)
        if len(names) == 2:
            line += f"{row['python'] / row['compiled']:>11.1f}x {row['max_rel_diff']:>11.2e}"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
