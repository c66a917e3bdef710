"""Pairwise similarity between exponent series and thresholded network assembly.

Edges connect region pairs whose similarity is strictly greater than the
threshold rho, with the similarity value as the edge weight.  Regions left
without any edge are dropped from the node list entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from xml.sax.saxutils import escape

import numpy as np

from .errors import InsufficientDataError
from .ingest import RegionKey
from .transform import ExponentSeries

MIN_OVERLAP = 2  # fewer common defined points than this -> undefined similarity


class SimilarityMeasure(str, Enum):
    PEARSON = "pearson"
    COSINE = "cosine"


@dataclass(frozen=True)
class BuildSettings:
    rho: float
    alpha: float
    measure: SimilarityMeasure

    def label(self) -> str:
        return f"rho{_num(self.rho)}_a{_num(self.alpha)}_{self.measure.value}"


def _num(x: float) -> str:
    return format(x, "g").replace(".", "p").replace("-", "m")


@dataclass
class CorrelationNetwork:
    """Weighted undirected graph over region keys; weights are similarities."""

    nodes: list[RegionKey]
    edges: list[tuple[int, int, float]]  # (a, b, weight) with a < b
    build_settings: BuildSettings

    @property
    def n(self) -> int:
        return len(self.nodes)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            a[i, j] = w
            a[j, i] = w
        return a


def pearson(x, y) -> float | None:
    """Product-moment coefficient, or None when undefined (zero variance or
    fewer than 2 points)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError("sequences must have equal length")
    if len(x) < MIN_OVERLAP:
        return None
    # mean of a constant array can be off by an ulp; test constancy directly
    if np.all(x == x[0]) or np.all(y == y[0]):
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.dot(dx, dx))
    sy = float(np.dot(dy, dy))
    if sx == 0.0 or sy == 0.0:
        return None
    r = float(np.dot(dx, dy)) / math.sqrt(sx * sy)
    return min(1.0, max(-1.0, r))


def cosine(x, y) -> float | None:
    """Uncentered cosine similarity, or None on a zero-norm vector."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError("sequences must have equal length")
    if len(x) < MIN_OVERLAP:
        return None
    nx = float(np.dot(x, x))
    ny = float(np.dot(y, y))
    if nx == 0.0 or ny == 0.0:
        return None
    c = float(np.dot(x, y)) / math.sqrt(nx * ny)
    return min(1.0, max(-1.0, c))


_SIMILARITY = {SimilarityMeasure.PEARSON: pearson, SimilarityMeasure.COSINE: cosine}


def similarity(x, y, measure: SimilarityMeasure) -> float | None:
    return _SIMILARITY[SimilarityMeasure(measure)](x, y)


def build_network(
    exps: list[ExponentSeries],
    rho: float = 0.0,
    measure: SimilarityMeasure = SimilarityMeasure.PEARSON,
    alpha: float | None = None,
) -> CorrelationNetwork:
    """Assemble the thresholded similarity network.

    Similarities are computed over pairwise-complete observations: the dates
    where both series have a defined exponent.  An edge exists iff the value
    is defined and strictly greater than rho.  Regions with no surviving edge
    are omitted from the node list; node order is input order restricted to
    survivors.  ``alpha`` is recorded in the build settings only.
    """
    measure = SimilarityMeasure(measure)
    if len(exps) < 2:
        raise InsufficientDataError(f"need >= 2 series to build a network, got {len(exps)}")

    # Place every series on a shared date axis so masks line up.
    start = min(e.dates[0] for e in exps)
    end = max(e.dates[-1] for e in exps)
    n_days = (end - start).days + 1
    vals = np.full((len(exps), n_days), np.nan)
    for r, e in enumerate(exps):
        off = (e.dates[0] - start).days
        v = np.where(e.defined, e.values, np.nan)
        vals[r, off : off + len(v)] = v

    sim_fn = _SIMILARITY[measure]
    raw_edges: list[tuple[int, int, float]] = []
    for i in range(len(exps)):
        for j in range(i + 1, len(exps)):
            both = ~np.isnan(vals[i]) & ~np.isnan(vals[j])
            if both.sum() < MIN_OVERLAP:
                continue
            s = sim_fn(vals[i][both], vals[j][both])
            if s is not None and s > rho:
                raw_edges.append((i, j, s))

    connected = sorted({i for i, _, _ in raw_edges} | {j for _, j, _ in raw_edges})
    remap = {old: new for new, old in enumerate(connected)}
    nodes = [exps[i].key for i in connected]
    edges = [(remap[i], remap[j], w) for i, j, w in raw_edges]
    settings = BuildSettings(
        rho=rho,
        alpha=alpha if alpha is not None else float("nan"),
        measure=measure,
    )
    return CorrelationNetwork(nodes=nodes, edges=edges, build_settings=settings)


def fmt9(x: float) -> str:
    """Serialize a float with 9 significant digits (round-half-even)."""
    return format(float(x), ".9g")


def write_edge_csv(net: CorrelationNetwork, stream) -> None:
    """Edge-list CSV ``source,target,weight`` using display strings."""
    import csv

    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["source", "target", "weight"])
    for a, b, w in net.edges:
        writer.writerow([net.nodes[a].display, net.nodes[b].display, fmt9(w)])


def write_graphml(net: CorrelationNetwork, stream) -> None:
    """GraphML export with weight as an edge attribute; byte-stable."""
    stream.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    stream.write(
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">\n'
        '  <key id="label" for="node" attr.name="label" attr.type="string"/>\n'
        '  <key id="weight" for="edge" attr.name="weight" attr.type="double"/>\n'
        '  <graph id="G" edgedefault="undirected">\n'
    )
    for i, key in enumerate(net.nodes):
        stream.write(f'    <node id="n{i}"><data key="label">{escape(key.display)}</data></node>\n')
    for a, b, w in net.edges:
        stream.write(
            f'    <edge source="n{a}" target="n{b}">'
            f'<data key="weight">{fmt9(w)}</data></edge>\n'
        )
    stream.write("  </graph>\n</graphml>\n")
