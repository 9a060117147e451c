"""Wall-clock comparison of the numba and numpy kernels on generated instances.

    python3 benchmarks/bench_kernels.py [--n 300] [--q 20000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from fraccolor.generators import GenSpec, gen_linear_girth4_hypergraph, gen_locally_r_colorable
from fraccolor.graph_engine import GraphParams, simulate_graph
from fraccolor.hyper_engine import HyperParams, simulate_hyper
from fraccolor.instances import degeneracy_ordering


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--q", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    g, loc = gen_locally_r_colorable(GenSpec(args.n, 12, r=2, seed=1))
    og = degeneracy_ordering(g)
    gp = GraphParams(args.q, 1.0, 2, og.d, seed=5)
    h = gen_linear_girth4_hypergraph(GenSpec(args.n, 10, r=3, seed=1))
    oh = degeneracy_ordering(h)
    hp = HyperParams(args.q, 1.0, 3, 10, seed=5)

    cases = {
        "graph r=2": lambda b: simulate_graph(g, og, loc, gp, backend=b),
        "hyper r=3": lambda b: simulate_hyper(h, oh, hp, backend=b),
    }
    print(f"n={args.n} q={args.q} best of {args.repeat}")
    print(f"{'case':<12}{'numba s':>10}{'numpy s':>10}{'speedup':>10}  identical")
    for name, fn in cases.items():
        fn("numba")  # compile outside the timing
        t_nb, a = best_of(lambda: fn("numba"), args.repeat)
        t_np, b = best_of(lambda: fn("numpy"), args.repeat)
        same = np.array_equal(a.state.p, b.state.p) and a.sets.sets == b.sets.sets
        print(f"{name:<12}{t_nb:>10.3f}{t_np:>10.3f}{t_np / t_nb:>10.1f}  {same}")


if __name__ == "__main__":
    main()
