"""Weighted modularity maximization: deterministic Louvain plus an exact
brute-force oracle for small graphs.

Modularity is the standard weighted form
Q = (1/2m) * sum_ij (A_ij - k_i k_j / 2m) * delta(c_i, c_j)
with A the weighted adjacency, k_i the weighted degree and m the total edge
weight.  The Louvain run is fully deterministic: nodes are visited in a
seeded shuffle of the canonically sorted node list, and tie-breaking rules
are fixed.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CoverageError,
    ComparisonError,
    InsufficientStructureError,
    PartitionSizeError,
)
from .netbuild import CorrelationNetwork, fmt9

BRUTE_FORCE_MAX_NODES = 12


@dataclass
class Partition:
    """Community assignment (dense labels 0..k-1) with its modularity score."""

    assignment: dict[int, int]
    modularity: float
    settings_fingerprint: dict = field(default_factory=dict)

    @property
    def num_communities(self) -> int:
        return max(self.assignment.values()) + 1 if self.assignment else 0

    def communities(self) -> list[set[int]]:
        out = [set() for _ in range(self.num_communities)]
        for node, label in self.assignment.items():
            out[label].add(node)
        return out


def modularity_of(
    net: CorrelationNetwork,
    assignment: dict[int, int],
    resolution: float = 1.0,
) -> float:
    """Recompute Q of an assignment from scratch (self-loop-free convention)."""
    for i in range(net.n):
        if i not in assignment:
            raise CoverageError(f"node {i} ({net.nodes[i].display}) missing from assignment")
    two_m = 2.0 * sum(w for _, _, w in net.edges)
    if two_m <= 0:
        raise InsufficientStructureError("network has no positive edge weight")
    deg = np.zeros(net.n)
    internal = 0.0
    for a, b, w in net.edges:
        deg[a] += w
        deg[b] += w
        if assignment[a] == assignment[b]:
            internal += 2.0 * w
    tot = {}
    for i in range(net.n):
        tot[assignment[i]] = tot.get(assignment[i], 0.0) + deg[i]
    q = internal / two_m
    q -= resolution * sum((s / two_m) ** 2 for s in tot.values())
    return q


def _fingerprint(net: CorrelationNetwork, seed, resolution) -> dict:
    s = net.build_settings
    return {
        "rho": s.rho,
        "alpha": s.alpha,
        "measure": s.measure.value,
        "seed": seed,
        "resolution": resolution,
    }


class _Level:
    """Working graph for one aggregation level: adjacency dicts + self loops."""

    def __init__(self, neighbors: list[dict[int, float]], selfw: list[float]):
        self.neighbors = neighbors
        self.selfw = selfw
        self.deg = [sum(nb.values()) + s for nb, s in zip(neighbors, selfw)]
        self.n = len(neighbors)


def _local_moving(level: _Level, order: list[int], two_m: float, resolution: float):
    """Phase 1: greedy node moves.  Returns (community of each node, moved?)."""
    comm = list(range(level.n))
    tot = list(level.deg)
    any_move = False
    while True:
        moved_in_sweep = False
        for i in order:
            ki = level.deg[i]
            cur = comm[i]
            # weight from i to each neighboring community (i excluded)
            w_to = {}
            for j, w in level.neighbors[i].items():
                w_to[comm[j]] = w_to.get(comm[j], 0.0) + w
            # take i out while scoring candidates
            tot[cur] -= ki
            candidates = set(w_to) | {cur}

            def score(c):
                return (2.0 * w_to.get(c, 0.0)) / two_m - resolution * 2.0 * ki * tot[c] / (
                    two_m * two_m
                )

            scores = {c: score(c) for c in candidates}
            best_score = max(scores.values())
            if scores[cur] == best_score:
                best = cur  # stay on ties: bias toward stability
            else:
                best = min(c for c, s in scores.items() if s == best_score)
            tot[best] += ki
            if best != cur:
                comm[i] = best
                moved_in_sweep = True
                any_move = True
        if not moved_in_sweep:
            break
    return comm, any_move


def _aggregate(level: _Level, comm: list[int]) -> tuple[_Level, dict[int, int]]:
    """Phase 2: contract communities into super-nodes with self-loop weights."""
    labels = sorted(set(comm))
    remap = {lab: idx for idx, lab in enumerate(labels)}
    k = len(labels)
    neighbors: list[dict[int, float]] = [dict() for _ in range(k)]
    selfw = [0.0] * k
    for i in range(level.n):
        ci = remap[comm[i]]
        selfw[ci] += level.selfw[i]
        for j, w in level.neighbors[i].items():
            cj = remap[comm[j]]
            if ci == cj:
                selfw[ci] += w  # each internal edge hits this twice (i->j, j->i)
            elif ci < cj:
                neighbors[ci][cj] = neighbors[ci].get(cj, 0.0) + w
    for a in range(k):
        for b, w in list(neighbors[a].items()):
            neighbors[b][a] = w
    return _Level(neighbors, selfw), remap


def louvain(
    net: CorrelationNetwork,
    seed: int = 0,
    resolution: float = 1.0,
) -> Partition:
    """Greedy multi-level modularity maximization.

    Deterministic for a fixed seed: node visit order is a seeded shuffle of
    the nodes sorted by display name, gain ties keep the current community
    (otherwise smallest label wins), and the final dense labels are ordered
    by descending community size with the smallest member index breaking
    ties.
    """
    if not net.edges:
        raise InsufficientStructureError("network has no edges")
    two_m = 2.0 * sum(w for _, _, w in net.edges)

    neighbors: list[dict[int, float]] = [dict() for _ in range(net.n)]
    for a, b, w in net.edges:
        neighbors[a][b] = neighbors[a].get(b, 0.0) + w
        neighbors[b][a] = neighbors[b].get(a, 0.0) + w
    level = _Level(neighbors, [0.0] * net.n)

    rng = random.Random(seed)
    # canonical identity of each current super-node, for order stability
    # under input permutation: level 0 uses display names, deeper levels the
    # smallest member name.
    canon = [net.nodes[i].display for i in range(net.n)]
    node_of = list(range(net.n))  # original node -> current super-node

    while True:
        order = sorted(range(level.n), key=lambda i: canon[i])
        rng.shuffle(order)
        comm, improved = _local_moving(level, order, two_m, resolution)
        if not improved:
            break
        level, remap = _aggregate(level, comm)
        node_of = [remap[comm[c]] for c in node_of]
        new_canon = [None] * level.n
        for sup, name in zip((remap[c] for c in comm), canon):
            if new_canon[sup] is None or name < new_canon[sup]:
                new_canon[sup] = name
        canon = new_canon

    # dense labels by descending size, ties by smallest member node index
    members: dict[int, list[int]] = {}
    for node, sup in enumerate(node_of):
        members.setdefault(sup, []).append(node)
    ranked = sorted(members.items(), key=lambda kv: (-len(kv[1]), min(kv[1])))
    assignment = {}
    for label, (_, nodes) in enumerate(ranked):
        for node in nodes:
            assignment[node] = label
    q = modularity_of(net, assignment, resolution=resolution)
    return Partition(
        assignment=assignment,
        modularity=q,
        settings_fingerprint=_fingerprint(net, seed, resolution),
    )


def _restricted_growth_strings(n: int):
    """All set partitions of range(n) as canonical label vectors, lex order."""
    labels = [0] * n

    def rec(i, maxlab):
        if i == n:
            yield tuple(labels)
            return
        for lab in range(maxlab + 2):
            labels[i] = lab
            yield from rec(i + 1, max(maxlab, lab))

    if n == 0:
        return
    yield from rec(1, 0)


def brute_force_best(net: CorrelationNetwork) -> Partition:
    """Exact modularity maximum by enumerating every set partition.

    Intended as a test oracle; limited to 12 nodes.  Ties go to the
    lexicographically smallest canonical label vector.
    """
    if not net.edges:
        raise InsufficientStructureError("network has no edges")
    if net.n > BRUTE_FORCE_MAX_NODES:
        raise PartitionSizeError(
            f"{net.n} nodes exceeds the enumeration limit of {BRUTE_FORCE_MAX_NODES}"
        )
    adj = net.adjacency()
    deg = adj.sum(axis=1)
    two_m = adj.sum()
    null = np.outer(deg, deg) / two_m
    b = adj - null
    best_q = -np.inf
    best = None
    for labels in _restricted_growth_strings(net.n):
        lab = np.asarray(labels)
        same = lab[:, None] == lab[None, :]
        q = float(b[same].sum()) / two_m
        if q > best_q:
            best_q = q
            best = labels
    assignment = {i: lab for i, lab in enumerate(best)}
    return Partition(
        assignment=assignment,
        modularity=best_q,
        settings_fingerprint=_fingerprint(net, None, 1.0),
    )


def compare_partitions(p: Partition, q: Partition):
    """Pairwise agreement (Rand index) plus a best-Jaccard community map.

    Computed over the intersection of the two node sets.  Returns
    (agreement, {p_label: (q_label, jaccard)}).
    """
    common = sorted(set(p.assignment) & set(q.assignment))
    if not common:
        raise ComparisonError("partitions share no nodes")
    n = len(common)
    # contingency counts
    cont: dict[tuple[int, int], int] = {}
    p_sizes: dict[int, int] = {}
    q_sizes: dict[int, int] = {}
    for node in common:
        a, b = p.assignment[node], q.assignment[node]
        cont[(a, b)] = cont.get((a, b), 0) + 1
        p_sizes[a] = p_sizes.get(a, 0) + 1
        q_sizes[b] = q_sizes.get(b, 0) + 1

    def choose2(x):
        return x * (x - 1) // 2

    total = choose2(n)
    same_both = sum(choose2(c) for c in cont.values())
    same_p = sum(choose2(c) for c in p_sizes.values())
    same_q = sum(choose2(c) for c in q_sizes.values())
    diff_both = total - same_p - same_q + same_both
    agreement = 1.0 if total == 0 else (same_both + diff_both) / total

    jaccard_map = {}
    for a, size_a in p_sizes.items():
        best_lab, best_j = None, -1.0
        for b, size_b in sorted(q_sizes.items()):
            inter = cont.get((a, b), 0)
            j = inter / (size_a + size_b - inter)
            if j > best_j:
                best_lab, best_j = b, j
        jaccard_map[a] = (best_lab, best_j)
    return agreement, jaccard_map


def write_partition_csv(net: CorrelationNetwork, part: Partition, stream) -> None:
    """CSV ``region,community`` with dense labels."""
    import csv

    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["region", "community"])
    for i, key in enumerate(net.nodes):
        writer.writerow([key.display, part.assignment[i]])


def partition_summary(part: Partition) -> dict:
    sizes = [0] * part.num_communities
    for lab in part.assignment.values():
        sizes[lab] += 1
    return {
        "modularity": float(fmt9(part.modularity)),
        "community_sizes": sizes,
        "settings_fingerprint": part.settings_fingerprint,
    }


def write_summary_json(part: Partition, stream) -> None:
    json.dump(partition_summary(part), stream, indent=2, sort_keys=True)
    stream.write("\n")
