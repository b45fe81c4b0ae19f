"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--resolution 20] [--queries 20000]
"""

import argparse
import random
import time

from causalfair import kernels
from causalfair.graph import CausalDag


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def dsep_workload(n_queries, seed=0):
    rng = random.Random(seed)
    work = []
    for _ in range(n_queries):
        n = rng.randint(5, 30)
        names = [f"V{i}" for i in range(n)]
        g = CausalDag(names, [(names[i], names[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.15])
        parents, children = g._kernel_adjacency
        x, y = rng.sample(range(n), 2)
        given = sum(1 << i for i in range(n) if i not in (x, y) and rng.random() < 0.2)
        work.append((parents, children, parents.tolist(), children.tolist(), x, y, given))
    return work


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolution", type=int, default=20)
    ap.add_argument("--queries", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (default {kernels.BACKEND})")
    work = dsep_workload(args.queries)
    rows = []
    for name in backends:
        mod = kernels.get_backend(name)
        scan = best_of(lambda: mod.scan_binary(args.resolution, 1e-6, 0.05, True), args.repeat)
        if name == "cython":
            run = lambda: [mod.dsep(p, c, x, y, z) for p, c, _, _, x, y, z in work]
        else:
            run = lambda: [mod.dsep(p, c, x, y, z) for _, _, p, c, x, y, z in work]
        dsep = best_of(run, args.repeat)
        rows.append((name, scan, dsep))
    print(f"{'backend':<8} {'scan res ' + str(args.resolution):>14} {str(args.queries) + ' dsep':>14}")
    for name, scan, dsep in rows:
        print(f"{name:<8} {scan:>13.4f}s {dsep:>13.4f}s")
    if len(rows) == 2:
        print(f"speedup  {rows[1][1] / rows[0][1]:>13.1f}x {rows[1][2] / rows[0][2]:>13.1f}x")


if __name__ == "__main__":
    main()
