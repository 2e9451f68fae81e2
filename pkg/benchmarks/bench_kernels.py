"""Compare the numba and numpy ANFIS kernels at the default model size.

    python3 benchmarks/bench_kernels.py [--rows 3500] [--repeat 5]

Reports the best-of-N wall time per kernel and the largest disagreement
between the two backends.
"""

import argparse
import time

import numpy as np

from windcast.anfis import grid_rules
from windcast.kernels import load_backend


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=3500)
    p.add_argument("--inputs", type=int, default=6)
    p.add_argument("--mfs", type=int, default=3)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    rng = np.random.default_rng(0)
    n, m = args.inputs, args.mfs
    X = rng.uniform(-1, 1, (args.rows, n))
    centers = np.sort(rng.uniform(-1, 1, (n, m)), axis=1)
    sigmas = rng.uniform(0.3, 1.0, (n, m))
    rules = grid_rules(n, m)
    F = rng.normal(size=(args.rows, len(rules)))
    coef = rng.normal(size=args.rows) / args.rows

    backends = {name: load_backend(name) for name in ("numba", "numpy")}
    # compile outside the timed region
    nb = backends["numba"]
    w0, _ = nb.normalized_firing(X[:2], centers, sigmas, rules)
    nb.design_matrix(w0, X[:2])
    nb.premise_grad(X[:2], centers, sigmas, w0, F[:2], coef[:2], coef[:2], rules)

    results = {}
    for name, k in backends.items():
        t_fire, (wbar, _) = best_time(lambda: k.normalized_firing(X, centers, sigmas, rules), args.repeat)
        t_design, A = best_time(lambda: k.design_matrix(wbar, X), args.repeat)
        y = np.einsum("tr,tr->t", wbar, F)
        t_grad, g = best_time(lambda: k.premise_grad(X, centers, sigmas, wbar, F, y, coef, rules), args.repeat)
        results[name] = {"firing": (t_fire, wbar), "design": (t_design, A), "premise_grad": (t_grad, g[0])}

    print(f"{args.rows} rows, {n} inputs x {m} MFs = {len(rules)} rules, best of {args.repeat}")
    print(f"{'kernel':<14}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>9}{'max |diff|':>12}")
    for kernel in ("firing", "design", "premise_grad"):
        tn, an = results["numba"][kernel]
        tp, ap = results["numpy"][kernel]
        diff = float(np.abs(np.asarray(an) - np.asarray(ap)).max())
        print(f"{kernel:<14}{tn * 1e3:>12.2f}{tp * 1e3:>12.2f}{tp / tn:>8.1f}x{diff:>12.1e}")


if __name__ == "__main__":
    main()
