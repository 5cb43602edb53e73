"""Street grid with one diagonal avenue: OSM -> street graph -> betweenness ranking."""

import argparse
from dataclasses import dataclass
from pathlib import Path

from geographs.graph_extract import features_to_geograph
from geographs.graph_metrics import attach_metrics, betweenness, metric_summary
from geographs.gis_export import write_graph
from geographs.osm_ingest import osm_streets
from geographs.synthetic import street_grid_osm


@dataclass
class Config:
    size: int = 5
    spacing: float = 0.002
    avenue: bool = True
    top: int = 5
    out: Path = Path("runs/street_grid")


def run(cfg: Config) -> list[tuple[str, float]]:
    collection, conns = osm_streets(street_grid_osm(cfg.size, cfg.spacing, avenue=cfg.avenue))
    g = features_to_geograph(collection, conns)
    scores = betweenness(g)
    g = attach_metrics(g, [scores])
    write_graph(g, cfg.out)
    names = {n: g.nodes[n].attributes["name"] for n in g.nodes}
    return [(names[n], v) for n, v in metric_summary(scores, cfg.top)]


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--size", type=int, default=Config.size)
    p.add_argument("--no-avenue", action="store_true")
    p.add_argument("--top", type=int, default=Config.top)
    p.add_argument("--out", type=Path, default=Config.out)
    a = p.parse_args()
    cfg = Config(size=a.size, avenue=not a.no_avenue, top=a.top, out=a.out)
    for name, value in run(cfg):
        print(f"{value:10.3f}  {name}")
    print(f"layers written under {cfg.out}*")


if __name__ == "__main__":
    main()
