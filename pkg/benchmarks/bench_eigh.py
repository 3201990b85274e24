"""Compare the compiled Hermitian eigensolver with the pure-Python fallback.

    python benchmarks/bench_eigh.py [--sizes 2,4,8,16,32] [--repeat 200] [--pipeline]

Each row reports the median time per call and the worst reconstruction error
``|V diag(w) V* - M|`` for both kernels, with numpy's ``eigh`` as a reference.
``--pipeline`` also times a full certification under each backend in a
subprocess (the backend is chosen at import).
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from localadj.linalg import _eigh_py

try:
    from localadj.linalg import _eigh_core
except ImportError:
    _eigh_core = None

PIPELINE = ("import time; from localadj import forge, linalg; from localadj.adjunction import certify; "
            "c = forge.forge_s3_irrep().cand; t = time.perf_counter(); certify(c, samples=500); "
            "print(linalg.BACKEND, time.perf_counter() - t)")


def random_hermitian(n, rng):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return x + x.conj().T


def timed(fn, mats):
    times, err = [], 0.0
    for m in mats:
        t = time.perf_counter()
        w, v = fn(m)
        times.append(time.perf_counter() - t)
        err = max(err, float(np.abs((v * w) @ v.conj().T - m).max()))
    return float(np.median(times)), err


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="2,4,8,16,32")
    p.add_argument("--repeat", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pipeline", action="store_true")
    args = p.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    kernels = [("python", _eigh_py.eigh), ("numpy", np.linalg.eigh)]
    if _eigh_core is not None:
        kernels.insert(0, ("cython", _eigh_core.eigh))
    else:
        print("compiled core not built; showing the fallback only")
    print(f"{'n':>4} " + " ".join(f"{k + ' us':>12} {'err':>9}" for k, _ in kernels) +
          ("   speedup" if _eigh_core is not None else ""))
    for n in (int(s) for s in args.sizes.split(",")):
        mats = [random_hermitian(n, rng) for _ in range(args.repeat)]
        rows = [timed(fn, mats) for _, fn in kernels]
        line = f"{n:>4} " + " ".join(f"{t * 1e6:12.1f} {e:9.1e}" for t, e in rows)
        if _eigh_core is not None:
            line += f"   {rows[1][0] / rows[0][0]:7.1f}x"
        print(line)
    if args.pipeline:
        for pure in ("0", "1"):
            env = dict(os.environ, LOCALADJ_PURE=pure)
            out = subprocess.run([sys.executable, "-c", PIPELINE], env=env, capture_output=True, text=True)
            name, secs = out.stdout.split()
            print(f"certify(S3 irrep) with {name} backend: {float(secs):.2f}s")


if __name__ == "__main__":
    main()
