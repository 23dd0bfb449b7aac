"""Model reduction: minimal sequences, the simplified net, visit indicators.

The movement net of a big grid is mostly corridor places that no formula
ever mentions. Planning only needs the start places and the labeled places,
connected by cheapest move sequences that touch no other labeled place in
between. Each such sequence becomes one abstract transition; the abstract
run is lifted back to grid moves afterwards.

The monitored net adds one latch place per trajectory proposition: every
abstract transition that ends on a cell carrying the proposition also
produces one token into the latch (saturating at one), so "was this region
ever visited" becomes a marking query.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence, Tuple

from .petri import VISIT, Atom, Marking, PetriNet


@dataclass(frozen=True)
class MinimalSequence:
    """Cheapest admissible move sequence between two places of the base net."""

    source: int
    target: int
    sequence: Tuple[int, ...]
    cost: Fraction


@dataclass(frozen=True)
class SimplifiedNet:
    """Reduced net over start + labeled places.

    ``lift_map[t]`` is the base-net move sequence realizing abstract
    transition ``t``; ``base_place[i]`` is the base-net place behind reduced
    place ``i``.
    """

    net: PetriNet
    lift_map: Tuple[MinimalSequence, ...]
    base_place: Tuple[int, ...]


@dataclass(frozen=True)
class MonitoredNet:
    """Simplified net extended with one saturating indicator place per
    trajectory proposition; indicator places carry no labels and are listed
    in ``indicator_of`` (proposition name -> place id)."""

    net: PetriNet
    indicator_of: Dict[str, int]
    mobility_places: Tuple[int, ...]
    base_place: Tuple[int, ...]


def labeled_places(net: PetriNet) -> Tuple[int, ...]:
    return tuple(p for p in range(net.num_places) if net.labels[p])


def minimal_sequence(net: PetriNet, source: int, target: int,
                     blocked: Iterable[int] = ()) -> Optional[MinimalSequence]:
    """Cheapest transition sequence moving one token from source to target
    without ever entering a blocked place.

    Only single-input single-output transitions (moves) are followed. Ties on
    cost resolve to the lexicographically smallest transition-id sequence,
    which is well defined because all costs are positive. Returns None when
    no admissible sequence exists.
    """
    for p in (source, target):
        if not 0 <= p < net.num_places:
            raise ValueError(f"unknown place {p}")
    if source == target:
        raise ValueError("source and target must differ")
    blocked = frozenset(blocked) - {source}
    if target in blocked:
        return None

    out = [[] for _ in range(net.num_places)]
    for t in range(net.num_transitions):
        if len(net.pre[t]) == 1 and len(net.post[t]) == 1:
            out[net.pre[t][0]].append((t, net.post[t][0]))

    best = {source: (Fraction(0), ())}
    heap = [(Fraction(0), (), source)]
    while heap:
        cost, seq, place = heapq.heappop(heap)
        if best.get(place, (None, None)) != (cost, seq):
            continue
        if place == target:
            return MinimalSequence(source, target, seq, cost)
        for t, nxt in out[place]:
            if nxt in blocked:
                continue
            cand = (cost + net.cost[t], seq + (t,))
            if nxt not in best or cand < best[nxt]:
                best[nxt] = cand
                heapq.heappush(heap, (cand[0], cand[1], nxt))
    return None


def build_simplified(net: PetriNet) -> SimplifiedNet:
    """Reduce the base net to start places plus labeled places.

    One abstract transition is created for every ordered pair (p, p') with
    p a start or labeled place, p' a labeled place, p != p', for which an
    admissible minimal sequence exists. Transitions are numbered by
    ascending (p, p') base place ids.
    """
    labeled = labeled_places(net)
    started = tuple(p for p in range(net.num_places) if net.initial_marking[p] > 0)
    base = tuple(sorted(set(labeled) | set(started)))
    index = {p: i for i, p in enumerate(base)}
    labeled_set = frozenset(labeled)

    lift_map = []
    pre = []
    post = []
    cost = []
    for p in base:
        for q in labeled:
            if p == q:
                continue
            ms = minimal_sequence(net, p, q, blocked=labeled_set - {p, q})
            if ms is None:
                continue
            lift_map.append(ms)
            pre.append((index[p],))
            post.append((index[q],))
            cost.append(ms.cost)

    reduced = PetriNet(
        num_places=len(base),
        pre=tuple(pre),
        post=tuple(post),
        cost=tuple(cost),
        labels=tuple(net.labels[p] for p in base),
        initial_marking=tuple(net.initial_marking[p] for p in base),
    )
    return SimplifiedNet(reduced, tuple(lift_map), base)


def lift(simplified: SimplifiedNet, sigma: Sequence[int]) -> Tuple[int, ...]:
    """Expand an abstract transition sequence into base-net moves."""
    moves = []
    for t in sigma:
        if not isinstance(t, int) or not 0 <= t < len(simplified.lift_map):
            raise ValueError(f"unknown abstract transition {t!r}")
        moves.extend(simplified.lift_map[t].sequence)
    return tuple(moves)


def build_monitored(simplified: SimplifiedNet,
                    trajectory_props: Iterable[str]) -> MonitoredNet:
    """Attach one saturating indicator place per trajectory proposition.

    A transition produces into an indicator iff its target place carries the
    proposition. Indicators start at one for propositions carried by places
    that are occupied initially (starting inside a region counts as a visit).
    """
    base = simplified.net
    props = sorted(set(trajectory_props))
    mobility = base.num_places
    indicator_of = {name: mobility + i for i, name in enumerate(props)}

    post = []
    for t in range(base.num_transitions):
        target = base.post[t][0]
        extra = tuple(indicator_of[name] for name in props
                      if Atom(VISIT, name) in base.labels[target])
        post.append(base.post[t] + extra)

    counts = list(base.initial_marking) + [0] * len(props)
    for p in range(base.num_places):
        if base.initial_marking[p] > 0:
            for atom in base.labels[p]:
                if atom.kind == VISIT and atom.name in indicator_of:
                    counts[indicator_of[atom.name]] = 1

    monitored = PetriNet(
        num_places=mobility + len(props),
        pre=base.pre,
        post=tuple(post),
        cost=base.cost,
        labels=base.labels + tuple(frozenset() for _ in props),
        initial_marking=tuple(counts),
        clamp_at_one=frozenset(indicator_of.values()),
    )
    return MonitoredNet(monitored, indicator_of, tuple(range(mobility)),
                        simplified.base_place)
