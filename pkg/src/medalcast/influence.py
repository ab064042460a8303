"""Country-event scoring and PageRank-based event influence.

Per-event scores accumulate medal counts divided by a normalized ranking
value (rank/participants, in (0, 1]), with a multiplicative boost for rows
belonging to the host nation.  Events become nodes of a directed weighted
graph; a global "Sports" hub node keeps the graph connected.  Influence is
a weighted PageRank where a node's mass flows out proportionally to its
outgoing edge weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import DomainError, NonConvergenceError

HUB_NODE = "Sports"
DEFAULT_HOST_BOOST = 1.2
DEFAULT_DAMPING = 0.85


class EventResult(NamedTuple):
    noc: str
    event: str
    year: int
    medal_count: int
    rank: int
    participants: int


@dataclass(frozen=True)
class CountryEventMatrix:
    """Sparse map of (noc, event) -> accumulated score."""

    scores: Mapping[tuple[str, str], float]

    def __post_init__(self):
        for key, s in self.scores.items():
            if not math.isfinite(s) or s < 0:
                raise DomainError(f"score for {key} must be finite and >= 0")

    @property
    def countries(self) -> tuple[str, ...]:
        return tuple(sorted({c for c, _ in self.scores}))

    @property
    def events(self) -> tuple[str, ...]:
        return tuple(sorted({e for _, e in self.scores}))

    def score(self, noc: str, event: str) -> float:
        return self.scores.get((noc, event), 0.0)


@dataclass(frozen=True)
class InfluenceGraph:
    """Directed weighted graph over events plus the hub node."""

    nodes: tuple[str, ...]
    edges: Mapping[tuple[str, str], float]

    def __post_init__(self):
        node_set = set(self.nodes)
        for (src, dst), w in self.edges.items():
            if src not in node_set or dst not in node_set:
                raise DomainError(f"edge ({src}, {dst}) references unknown node")
            if src == dst:
                raise DomainError("self-edges are not allowed")
            if not (math.isfinite(w) and w > 0):
                raise DomainError(f"edge ({src}, {dst}) weight must be positive")


def event_scores(
    results: Iterable[tuple],
    hosts: Mapping[int, str],
    *,
    host_boost: float = DEFAULT_HOST_BOOST,
) -> CountryEventMatrix:
    """Accumulate S[c, e] = sum_t medal_count / (rank/participants) * host factor."""
    scores: dict[tuple[str, str], float] = {}
    for row in results:
        r = EventResult(*row)
        if r.rank <= 0 or r.participants <= 0:
            raise DomainError(
                f"rank and participants must be positive ({r.noc}, {r.event}, {r.year})"
            )
        if r.participants < r.rank:
            raise DomainError(
                f"participants < rank for ({r.noc}, {r.event}, {r.year})"
            )
        if r.medal_count < 0:
            raise DomainError("medal_count must be non-negative")
        normalized_rank = r.rank / r.participants
        factor = host_boost if hosts.get(r.year) == r.noc else 1.0
        key = (r.noc, r.event)
        scores[key] = scores.get(key, 0.0) + r.medal_count / normalized_rank * factor
    return CountryEventMatrix(scores=scores)


def build_influence_graph(
    matrix: CountryEventMatrix, hub_weight: float
) -> InfluenceGraph:
    """Connect events that share successful countries; wire in the hub.

    The edge weight between two events is the summed min-overlap of country
    scores (shared co-success mass); zero-overlap pairs get no direct edge
    and stay connected only through the bidirectional hub edges.
    """
    if not matrix.scores:
        raise DomainError("country-event matrix is empty")
    if hub_weight <= 0:
        raise DomainError("hub_weight must be positive")
    events = matrix.events
    by_event: dict[str, dict[str, float]] = {e: {} for e in events}
    for (c, e), s in matrix.scores.items():
        if s > 0:
            by_event[e][c] = s

    edges: dict[tuple[str, str], float] = {}
    for i, ea in enumerate(events):
        for eb in events[i + 1 :]:
            shared = by_event[ea].keys() & by_event[eb].keys()
            w = sum(min(by_event[ea][c], by_event[eb][c]) for c in shared)
            if w > 0:
                edges[(ea, eb)] = w
                edges[(eb, ea)] = w
    for e in events:
        edges[(HUB_NODE, e)] = hub_weight
        edges[(e, HUB_NODE)] = hub_weight
    return InfluenceGraph(nodes=tuple([*events, HUB_NODE]), edges=edges)


def pagerank(
    graph: InfluenceGraph,
    d: float = DEFAULT_DAMPING,
    tol: float = 1e-12,
    max_iter: int = 1000,
) -> dict[str, float]:
    """Weighted PageRank by power iteration.

    Mass from a node is split across its out-edges proportionally to edge
    weight; dangling nodes spread their mass uniformly.  Iterates until the
    L1 change falls below ``tol``.  Scores sum to one.
    """
    if not 0.0 < d < 1.0:
        raise DomainError("damping factor must lie in (0, 1)")
    if tol <= 0:
        raise DomainError("tol must be positive")
    nodes = sorted(graph.nodes)
    index = {nm: i for i, nm in enumerate(nodes)}
    n = len(nodes)
    if n == 0:
        raise DomainError("graph has no nodes")

    src = np.array([index[s] for (s, _t) in graph.edges], dtype=int)
    dst = np.array([index[t] for (_s, t) in graph.edges], dtype=int)
    w = np.array(list(graph.edges.values()), dtype=float)
    out_weight = np.zeros(n)
    np.add.at(out_weight, src, w)
    dangling = out_weight == 0
    frac = np.zeros(len(w))
    if len(w):
        frac = w / out_weight[src]

    v = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = np.full(n, (1.0 - d) / n)
        if len(w):
            np.add.at(nxt, dst, d * v[src] * frac)
        if dangling.any():
            nxt += d * v[dangling].sum() / n
        delta = np.abs(nxt - v).sum()
        v = nxt
        if delta < tol:
            v = v / v.sum()
            return {nm: float(v[index[nm]]) for nm in nodes}
    raise NonConvergenceError(
        f"pagerank did not converge within {max_iter} iterations",
        last_iterate={nm: float(v[index[nm]]) for nm in nodes},
        last_delta=float(delta),
    )


def ranked(scores: Mapping[str, float]) -> list[tuple[str, float]]:
    """Deterministic ranking: descending score, ties in node-name order."""
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


def country_influence(
    matrix: CountryEventMatrix, event_rank: Mapping[str, float]
) -> dict[str, float]:
    """Project event influence onto countries.

    Heuristic projection: a country's raw influence is the sum over events
    of its score times the event's PageRank, normalized to sum to one.
    """
    raw: dict[str, float] = {}
    for (c, e), s in matrix.scores.items():
        raw[c] = raw.get(c, 0.0) + s * event_rank.get(e, 0.0)
    total = sum(raw.values())
    if total <= 0:
        return {c: 0.0 for c in raw}
    return {c: raw[c] / total for c in sorted(raw)}
