"""Time Brandes betweenness on random geometric graphs for several worker counts."""

import argparse
import time

import numpy as np

from geographs.graph_metrics import betweenness
from geographs.synthetic import random_geometric_graph


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--nodes", type=int, nargs="+", default=[1000, 5000, 10000])
    p.add_argument("--mean-degree", type=float, default=6.0)
    p.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4])
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    betweenness(random_geometric_graph(50, 4.0, a.seed), weighted=a.weighted)  # warm the JIT
    print("nodes   edges  workers  seconds  identical")
    for n in a.nodes:
        g = random_geometric_graph(n, a.mean_degree, a.seed)
        ref = None
        for w in a.workers:
            t0 = time.perf_counter()
            b = betweenness(g, weighted=a.weighted, workers=w)
            dt = time.perf_counter() - t0
            vec = np.array([b.values[v] for v in g.node_ids()])
            ref = vec if ref is None else ref
            same = vec.tobytes() == ref.tobytes()
            print(f"{n:6d} {g.number_of_edges():7d} {w:8d} {dt:8.2f}  {same}")


if __name__ == "__main__":
    main()
