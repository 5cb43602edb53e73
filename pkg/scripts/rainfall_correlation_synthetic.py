"""Two-block rainfall series -> correlation networks over a range of thresholds."""

import argparse
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from geographs.gis_export import write_graph
from geographs.network_builders import correlation_network
from geographs.synthetic import two_block_series


@dataclass
class Config:
    blocks: tuple[int, int] = (4, 4)
    length: int = 144
    noise: float = 0.1
    seed: int = 7
    taus: list[float] = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 0.95])
    out: Path = Path("runs/rainfall")


def components(g) -> int:
    seen, count = set(), 0
    for s in g.node_ids():
        if s in seen:
            continue
        count += 1
        seen.add(s)
        queue = deque([s])
        while queue:
            for w in g.neighbors(queue.popleft()):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
    return count


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--noise", type=float, default=Config.noise)
    p.add_argument("--seed", type=int, default=Config.seed)
    p.add_argument("--out", type=Path, default=Config.out)
    a = p.parse_args()
    cfg = Config(noise=a.noise, seed=a.seed, out=a.out)
    ts = two_block_series(cfg.blocks, cfg.length, cfg.noise, cfg.seed)
    print(" tau   edges  components")
    for tau in cfg.taus:
        g = correlation_network(ts, tau)
        print(f"{tau:5.2f} {g.number_of_edges():6d} {components(g):10d}")
        write_graph(g, cfg.out.with_name(f"{cfg.out.name}_tau{tau:.2f}"), ("geojson",))


if __name__ == "__main__":
    main()
