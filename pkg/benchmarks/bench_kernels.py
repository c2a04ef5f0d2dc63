"""Time the numba kernels against the numpy fallback.

Each backend runs in its own interpreter because the choice is fixed at
import time by ``NONLIP_NUMBA``.

    python3 benchmarks/bench_kernels.py --size 100000 --repeat 5
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = """
import json, sys, time
import numpy as np
from nonlip import _kernels
size, repeat = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
v = rng.uniform(-4, 4, size); w = rng.uniform(0, 2, size)
lo = -rng.uniform(0, 3, size); hi = rng.uniform(0, 3, size)
px = rng.uniform(-2, 6, size); py = rng.uniform(-2, 2, size)
sub = -np.ones(size - 1); sup = -np.ones(size - 1); diag = np.full(size, 2.5); rhs = rng.standard_normal(size)
cases = {
    "prox_lp_box_vec": lambda: _kernels.prox_lp_box_vec(v, w, 0.5, lo, hi),
    "exp_region_project": lambda: _kernels.exp_region_project(px, py),
    "solve_tridiagonal": lambda: _kernels.solve_tridiagonal(sub, diag, sup, rhs),
}
out = {"backend": _kernels.backend()}
for name, fn in cases.items():
    fn()  # warm-up, includes compilation
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter(); fn(); best = min(best, time.perf_counter() - t)
    out[name] = best
print(json.dumps(out))
"""


def run(flag, size, repeat):
    env = dict(os.environ, NONLIP_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", WORKER, str(size), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    fast, slow = run("1", args.size, args.repeat), run("0", args.size, args.repeat)
    print(f"size={args.size} repeat={args.repeat} backends={fast['backend']}/{slow['backend']}")
    print(f"{'kernel':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name in ("prox_lp_box_vec", "exp_region_project", "solve_tridiagonal"):
        a, b = fast[name], slow[name]
        print(f"{name:<22}{a:>12.3e}{b:>12.3e}{b / a:>10.2f}")


if __name__ == "__main__":
    main()
