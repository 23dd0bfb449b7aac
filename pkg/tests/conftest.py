from __future__ import annotations

from fractions import Fraction
from typing import Sequence, Tuple

import pytest

from tampnet import (Atom, END, MonitoredNet, PetriNet, build_offline,
                     load_env, parse_env)
from tampnet.data import fixture_path

EMPTY = frozenset()


def end_label(name: str) -> frozenset:
    return frozenset({Atom(END, name)})


def hand_net(num_places: int, arcs: Sequence[Tuple[tuple, tuple, object]],
             labels: Sequence[frozenset], m0: Sequence[int]) -> PetriNet:
    """Small literal net builder for structural tests."""
    return PetriNet(
        num_places=num_places,
        pre=tuple(tuple(a[0]) for a in arcs),
        post=tuple(tuple(a[1]) for a in arcs),
        cost=tuple(Fraction(a[2]) for a in arcs),
        labels=tuple(labels),
        initial_marking=tuple(m0),
    )


def as_monitored(net: PetriNet) -> MonitoredNet:
    """Wrap a hand-built net so the basis-graph layer accepts it."""
    places = tuple(range(net.num_places))
    return MonitoredNet(net, {}, places, places)


def relay_net() -> MonitoredNet:
    # unlabeled hop feeding the only watched move
    net = hand_net(3, [((0,), (1,), 1), ((1,), (2,), 1)],
                   [EMPTY, EMPTY, end_label("x")], (1, 0, 0))
    return as_monitored(net)


def two_feeders_net() -> MonitoredNet:
    # two incomparable ways to enable the watched move
    net = hand_net(4, [((0,), (2,), 1), ((1,), (2,), 2), ((2,), (3,), 1)],
                   [EMPTY, EMPTY, EMPTY, end_label("x")], (1, 1, 0, 0))
    return as_monitored(net)


def hop_chain_net() -> MonitoredNet:
    net = hand_net(4, [((0,), (1,), 1), ((1,), (2,), 2), ((2,), (3,), 5)],
                   [EMPTY, EMPTY, EMPTY, end_label("x")], (1, 0, 0, 0))
    return as_monitored(net)


def two_cycle_net() -> MonitoredNet:
    net = hand_net(3, [((0,), (1,), 1), ((1,), (0,), 1), ((1,), (2,), 1)],
                   [EMPTY, EMPTY, end_label("x")], (1, 0, 0))
    return as_monitored(net)


def join_net() -> MonitoredNet:
    # the watched move consumes from two places at once
    net = hand_net(5, [((0,), (2,), 1), ((1,), (3,), 1), ((2, 3), (4,), 1)],
                   [EMPTY] * 4 + [end_label("x")], (1, 1, 0, 0, 0))
    return as_monitored(net)


def brute_minimal_sequence(net, source, target, blocked):
    """All-simple-paths reference for minimal_sequence (small nets only)."""
    blocked = frozenset(blocked) - {source}
    if target in blocked:
        return None
    out = [[] for _ in range(net.num_places)]
    for t in range(net.num_transitions):
        if len(net.pre[t]) == 1 and len(net.post[t]) == 1:
            out[net.pre[t][0]].append((t, net.post[t][0]))
    best = None
    stack = [(source, (), Fraction(0), frozenset({source}))]
    while stack:
        place, seq, cost, seen = stack.pop()
        if best is not None and cost > best[0]:
            continue
        if place == target:
            key = (cost, seq)
            if best is None or key < best:
                best = key
            continue
        for t, nxt in out[place]:
            if nxt in seen or nxt in blocked:
                continue
            stack.append((nxt, seq + (t,), cost + net.cost[t], seen | {nxt}))
    return best


def square_env(side: int, regions, agents, obstacles=(), move_cost=1):
    return parse_env({
        "grid": {"rows": side, "cols": side},
        "obstacles": [list(c) for c in obstacles],
        "regions": regions,
        "agents": [list(a) for a in agents],
        "move_cost": move_cost,
    })


@pytest.fixture(scope="session")
def demo_env():
    return load_env(fixture_path("demo_3x3.json"))


@pytest.fixture(scope="session")
def plant_env():
    return load_env(fixture_path("plant_8x11.json"))


@pytest.fixture(scope="session")
def demo_offline(demo_env):
    return build_offline(demo_env)


@pytest.fixture(scope="session")
def plant_offline(plant_env):
    return build_offline(plant_env)
