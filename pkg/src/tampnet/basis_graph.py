"""Incremental min-cost basis reachability graph over a monitored net.

Transitions are split into explicit ones (every firing is a graph edge) and
implicit ones (cheap moves that only appear inside explanations). A basis
marking is reached by alternating minimal implicit explanation vectors with
one explicit firing. The builder runs a lowest-cost-first expansion, so each
basis marking is finalized with its minimal accumulated cost q and exactly
one parent edge; the result is a tree with |edges| = |markings| - 1.

For nets produced by this pipeline every abstract transition targets a
labeled place and is therefore explicit; the implicit machinery still runs
for hand-built nets and is exercised by the structural tests.
"""

from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Sequence, Set, Tuple

from .abstraction import MonitoredNet
from .errors import (CacheDigestError, CacheFormatError, CacheVersionError,
                     IntegrityError, StateBudgetError)
from .petri import END, Marking, PetriNet, enabled, fire

DEFAULT_STATE_CAP = 5_000_000
CACHE_FORMAT = "tampnet-basis-graph"
CACHE_VERSION = 1


@dataclass(frozen=True)
class BasisPartition:
    """Explicit/implicit transition split with an acyclic implicit subnet."""

    explicit: frozenset
    implicit: frozenset


class Explanation(NamedTuple):
    """Minimal implicit firing vector enabling some explicit transition.

    ``vector`` is sparse: ((transition, count), ...) sorted by transition.
    """

    vector: Tuple[Tuple[int, int], ...]
    cost: Fraction


class Edge(NamedTuple):
    parent: int
    transition: int
    explanation: Tuple[Tuple[int, int], ...]
    cost: Fraction  # accumulated q at the child


@dataclass
class BasisGraph:
    """Markings in finalization order (ascending q); edges[0] is None.

    ``packed`` optionally mirrors the markings as single integers (one
    fixed-width field per place) for fast scanning; it carries no extra
    information.
    """

    markings: Tuple[Marking, ...]
    edges: Tuple[Optional[Edge], ...]
    packed: Optional[Tuple[int, ...]] = None
    packed_shift: Optional[int] = None

    def q(self, i: int):
        edge = self.edges[i]
        return edge.cost if edge is not None else Fraction(0)

    def __len__(self) -> int:
        return len(self.markings)


def choose_partition(qm: MonitoredNet) -> BasisPartition:
    """Split transitions per the basis rules.

    Transitions producing into an indicator place or an end-labeled place
    must be explicit; the rest start implicit and are promoted greedily
    (smallest transition id in a found cycle first) until the implicit
    subnet is acyclic.
    """
    net = qm.net
    indicators = set(qm.indicator_of.values())
    implicit = set()
    for t in range(net.num_transitions):
        watched = any(
            p in indicators or any(a.kind == END for a in net.labels[p])
            for p in net.post[t])
        if not watched:
            implicit.add(t)
    while True:
        cycle = _find_cycle(net, implicit)
        if cycle is None:
            break
        implicit.discard(min(cycle))
    explicit = frozenset(range(net.num_transitions)) - frozenset(implicit)
    return BasisPartition(explicit, frozenset(implicit))


def validate_partition(qm: MonitoredNet, part: BasisPartition) -> None:
    net = qm.net
    everything = set(range(net.num_transitions))
    if part.explicit | part.implicit != everything or part.explicit & part.implicit:
        raise ValueError("partition must split the transition set exactly")
    indicators = set(qm.indicator_of.values())
    for t in sorted(part.implicit):
        for p in net.post[t]:
            if p in indicators or any(a.kind == END for a in net.labels[p]):
                raise ValueError(
                    f"transition {t} feeds a watched place and must be explicit")
    if _find_cycle(net, part.implicit) is not None:
        raise ValueError("implicit transitions must induce an acyclic subnet")


def _find_cycle(net: PetriNet, implicit) -> Optional[List[int]]:
    """Return the transition ids on one cycle of the implicit subnet, if any."""
    succ: Dict[tuple, List[tuple]] = {}
    for t in sorted(implicit):
        succ[("t", t)] = [("p", p) for p in net.post[t]]
        for p in net.pre[t]:
            succ.setdefault(("p", p), []).append(("t", t))
    for node in succ.values():
        node.sort()

    color: Dict[tuple, int] = {}
    for start in sorted(succ):
        if color.get(start):
            continue
        path = [start]
        iters = [iter(succ.get(start, ()))]
        color[start] = 1
        while path:
            nxt = next(iters[-1], None)
            if nxt is None:
                color[path.pop()] = 2
                iters.pop()
                continue
            state = color.get(nxt, 0)
            if state == 1:
                cycle = path[path.index(nxt):]
                return [n[1] for n in cycle if n[0] == "t"]
            if state == 0:
                color[nxt] = 1
                path.append(nxt)
                iters.append(iter(succ.get(nxt, ())))
    return None


def minimal_explanations(qm: MonitoredNet, part: BasisPartition, m: Marking,
                         t: int) -> List[Explanation]:
    """All minimal implicit firing vectors y enabling explicit ``t`` from m.

    Returned in ascending order of the sparse (transition, count) vectors.
    When ``t`` is already enabled the unique answer is the zero vector.
    Search walks implicit firings breadth-first, stopping each branch at
    first enablement: a proper prefix of a minimal explanation is never
    enabling, so this loses nothing.
    """
    net = qm.net
    if t not in part.explicit:
        raise ValueError(f"transition {t} is not explicit")
    if enabled(net, m, t):
        return [Explanation((), Fraction(0))]

    implicit = sorted(part.implicit)
    zero = (0,) * len(implicit)
    frontier = [(m, zero)]
    seen: Set[tuple] = {zero}
    hits = []
    guard = 0
    while frontier:
        next_frontier = []
        for mk, y in frontier:
            for k, ti in enumerate(implicit):
                if not enabled(net, mk, ti):
                    continue
                y2 = y[:k] + (y[k] + 1,) + y[k + 1:]
                if y2 in seen:
                    continue
                seen.add(y2)
                guard += 1
                if guard > 1_000_000:
                    raise IntegrityError(
                        "explanation search did not converge; implicit subnet is likely cyclic")
                mk2 = fire(net, mk, ti)
                if enabled(net, mk2, t):
                    hits.append(y2)
                else:
                    next_frontier.append((mk2, y2))
        frontier = next_frontier

    out = []
    for y in _pareto(hits):
        cost = sum((net.cost[implicit[k]] * n for k, n in enumerate(y) if n), Fraction(0))
        sparse = tuple((implicit[k], n) for k, n in enumerate(y) if n)
        out.append(Explanation(sparse, cost))
    out.sort(key=lambda e: e.vector)
    return out


def _pareto(vectors):
    vectors = sorted(set(vectors))
    return [v for v in vectors
            if not any(w != v and all(a <= b for a, b in zip(w, v)) for w in vectors)]


def apply_explanation(net: PetriNet, m: Marking, vector) -> Marking:
    """Marking after firing an explanation vector (order-independent)."""
    out = list(m)
    for t, count in vector:
        for p in net.pre[t]:
            out[p] -= count
        for p in net.post[t]:
            out[p] += count
            if p in net.clamp_at_one and out[p] > 1:
                out[p] = 1
    if any(v < 0 for v in out):
        raise IntegrityError("explanation vector is not fireable from this marking")
    return tuple(out)


def build_graph(qm: MonitoredNet, part: Optional[BasisPartition] = None,
                state_cap: int = DEFAULT_STATE_CAP) -> BasisGraph:
    """Build the min-cost basis graph by lowest-q-first expansion.

    Deterministic: markings come out in ascending (q, discovery) order,
    children are generated in ascending transition id then ascending
    explanation vector, and the first minimal-cost parent edge wins.
    Raises StateBudgetError when more than ``state_cap`` markings arise.
    """
    if part is None:
        part = choose_partition(qm)
    else:
        validate_partition(qm, part)
    net = qm.net
    single_input = all(len(net.pre[t]) == 1 for t in part.explicit)
    if not part.implicit and single_input:
        return _build_packed(qm, part, state_cap)
    return _build_general(qm, part, state_cap)


def _build_packed(qm: MonitoredNet, part: BasisPartition, state_cap: int) -> BasisGraph:
    """Fast path: no implicit transitions, single-input explicit transitions.

    Markings are packed into one integer, a fixed-width field per place.
    Expansion order matches the general path (ascending transition id; with
    transitions numbered ascending by source place, grouping by source
    preserves that order).
    """
    net = qm.net
    n = net.num_places
    tokens = max(1, sum(net.initial_marking))
    shift = max(4, tokens.bit_length() + 1)
    clamped = net.clamp_at_one

    def pack(m: Marking) -> int:
        return sum(c << (shift * p) for p, c in enumerate(m))

    def unpack(v: int) -> Marking:
        mask = (1 << shift) - 1
        return tuple((v >> (shift * p)) & mask for p in range(n))

    place_bit = [1 << (shift * p) for p in range(n)]
    place_mask = [((1 << shift) - 1) << (shift * p) for p in range(n)]

    by_source: List[List[Tuple[int, int, Tuple[int, ...], object]]] = [[] for _ in range(n)]
    exact_int = all(net.cost[t].denominator == 1 for t in range(net.num_transitions))
    for t in sorted(part.explicit):
        src = net.pre[t][0]
        producing = tuple(p for p in net.post[t] if p in clamped)
        plain = sum(place_bit[p] for p in net.post[t] if p not in clamped) - place_bit[src]
        weight = int(net.cost[t]) if exact_int else net.cost[t]
        by_source[src].append((t, plain, producing, weight))

    root = pack(net.initial_marking)
    dist = {root: 0}
    via: Dict[int, Optional[Tuple[int, int]]] = {root: None}
    heap = [(0, 0, root)]
    counter = 1
    order: List[int] = []
    index: Dict[int, int] = {}
    edges: List[Optional[Edge]] = []

    while heap:
        q, _, m = heapq.heappop(heap)
        if m in index or q > dist[m]:
            continue
        if len(order) >= state_cap:
            raise StateBudgetError(state_cap, what="basis graph construction")
        idx = len(order)
        index[m] = idx
        order.append(m)
        came = via[m]
        edges.append(None if came is None else Edge(index[came[0]], came[1], (), q))
        candidates = [x for src in range(n) if m & place_mask[src] for x in by_source[src]]
        candidates.sort()
        for t, plain, producing, weight in candidates:
            child = m + plain
            for p in producing:
                if not child & place_mask[p]:
                    child += place_bit[p]
            nq = q + weight
            old = dist.get(child)
            if old is None or nq < old:
                dist[child] = nq
                via[child] = (m, t)
                heapq.heappush(heap, (nq, counter, child))
                counter += 1

    markings = tuple(unpack(m) for m in order)
    edges = tuple(e if e is None else Edge(e.parent, e.transition, (), Fraction(e.cost))
                  for e in edges)
    return BasisGraph(markings, edges, packed=tuple(order), packed_shift=shift)


def _build_general(qm: MonitoredNet, part: BasisPartition, state_cap: int) -> BasisGraph:
    net = qm.net
    explicit = sorted(part.explicit)
    root = net.initial_marking
    dist = {root: Fraction(0)}
    via: Dict[Marking, Optional[Tuple[Marking, int, tuple]]] = {root: None}
    heap = [(Fraction(0), 0, root)]
    counter = 1
    order: List[Marking] = []
    index: Dict[Marking, int] = {}
    edges: List[Optional[Edge]] = []

    while heap:
        q, _, m = heapq.heappop(heap)
        if m in index or q > dist[m]:
            continue
        if len(order) >= state_cap:
            raise StateBudgetError(state_cap, what="basis graph construction")
        idx = len(order)
        index[m] = idx
        order.append(m)
        came = via[m]
        edges.append(None if came is None else Edge(index[came[0]], came[1], came[2], q))
        for t in explicit:
            for expl in minimal_explanations(qm, part, m, t):
                staged = apply_explanation(net, m, expl.vector)
                child = fire(net, staged, t)
                nq = q + expl.cost + net.cost[t]
                old = dist.get(child)
                if old is None or nq < old:
                    dist[child] = nq
                    via[child] = (m, t, expl.vector)
                    heapq.heappush(heap, (nq, counter, child))
                    counter += 1

    graph = BasisGraph(tuple(order), tuple(edges))
    _attach_packed(graph)
    return graph


def _attach_packed(graph: BasisGraph) -> None:
    if not graph.markings:
        return
    peak = max(max(m) for m in graph.markings)
    n = len(graph.markings[0])
    shift = max(4, peak.bit_length() + 1)
    if n * shift > 4096:
        return
    graph.packed = tuple(
        sum(c << (shift * p) for p, c in enumerate(m)) for m in graph.markings)
    graph.packed_shift = shift


def net_digest(net: PetriNet) -> str:
    """Stable fingerprint of a net, used to pair caches with their model."""
    payload = {
        "places": net.num_places,
        "pre": [list(ps) for ps in net.pre],
        "post": [list(ps) for ps in net.post],
        "cost": [[c.numerator, c.denominator] for c in net.cost],
        "labels": [sorted([a.kind, a.name] for a in atoms) for atoms in net.labels],
        "m0": list(net.initial_marking),
        "clamp": sorted(net.clamp_at_one),
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def save_cache(graph: BasisGraph, qm: MonitoredNet, part: BasisPartition, path) -> None:
    """Persist the graph as canonical JSON; byte-identical for equal inputs."""
    container = {
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "digest": net_digest(qm.net),
        "partition": {
            "explicit": sorted(part.explicit),
            "implicit": sorted(part.implicit),
        },
        "markings": [[[p, c] for p, c in enumerate(m) if c] for m in graph.markings],
        "edges": [
            None if e is None else
            [e.parent, e.transition, [list(pair) for pair in e.explanation],
             [Fraction(e.cost).numerator, Fraction(e.cost).denominator]]
            for e in graph.edges
        ],
    }
    text = json.dumps(container, sort_keys=True, separators=(",", ":")) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_cache(path, qm: MonitoredNet) -> Tuple[BasisGraph, BasisPartition]:
    """Load a cache written by save_cache, checking format, version, digest."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            container = json.load(fh)
    except OSError as exc:
        raise CacheFormatError(f"cannot read cache {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CacheFormatError(f"cache {path} is truncated or not JSON: {exc}") from exc
    if not isinstance(container, dict) or container.get("format") != CACHE_FORMAT:
        raise CacheFormatError(f"{path} is not a basis graph cache")
    if container.get("version") != CACHE_VERSION:
        raise CacheVersionError(container.get("version"), CACHE_VERSION)
    expected = net_digest(qm.net)
    if container.get("digest") != expected:
        raise CacheDigestError(str(container.get("digest")), expected)

    n = qm.net.num_places
    try:
        markings = []
        for sparse in container["markings"]:
            counts = [0] * n
            for p, c in sparse:
                counts[p] = c
            markings.append(tuple(counts))
        edges: List[Optional[Edge]] = []
        for raw in container["edges"]:
            if raw is None:
                edges.append(None)
                continue
            parent, transition, explanation, (num, den) = raw
            edges.append(Edge(parent, transition,
                              tuple((t, c) for t, c in explanation),
                              Fraction(num, den)))
        partition = BasisPartition(
            frozenset(container["partition"]["explicit"]),
            frozenset(container["partition"]["implicit"]),
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CacheFormatError(f"cache {path} has a malformed body: {exc}") from exc
    if len(edges) != len(markings) or not markings or edges[0] is not None:
        raise CacheFormatError(f"cache {path} has inconsistent markings/edges")
    graph = BasisGraph(tuple(markings), tuple(edges))
    _attach_packed(graph)
    return graph, partition
