from fractions import Fraction

import pytest

from tampnet import (Atom, END, VISIT, FiringError, PetriNet, enabled, fire,
                     replay, sequence_cost)

from conftest import EMPTY, hand_net


def _chain():
    # a -> b -> c, unit and 3/2 costs, c labeled
    return hand_net(
        3,
        [((0,), (1,), 1), ((1,), (2,), "3/2")],
        [EMPTY, EMPTY, frozenset({Atom(VISIT, "x"), Atom(END, "x")})],
        (1, 0, 0),
    )


def test_enabled_and_fire():
    net = _chain()
    assert enabled(net, (1, 0, 0), 0)
    assert not enabled(net, (1, 0, 0), 1)
    assert fire(net, (1, 0, 0), 0) == (0, 1, 0)
    assert fire(net, (0, 1, 0), 1) == (0, 0, 1)


def test_fire_refuses_disabled_with_place_and_step():
    net = _chain()
    with pytest.raises(FiringError) as err:
        fire(net, (1, 0, 0), 1, step=4)
    assert err.value.place == 1
    assert err.value.step == 4
    assert "place 1" in str(err.value)


def test_replay_trace_and_word():
    net = _chain()
    run = replay(net, net.initial_marking, (0, 1))
    assert run.final == (0, 0, 1)
    assert run.markings == ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    assert run.word[0] == frozenset()
    assert run.word[1] == frozenset()
    assert run.word[2] == {Atom(VISIT, "x"), Atom(END, "x")}


def test_replay_word_starts_with_initially_occupied_labels():
    net = hand_net(2, [((0,), (1,), 1)],
                   [frozenset({Atom(VISIT, "a")}), EMPTY], (2, 0))
    run = replay(net, net.initial_marking, ())
    assert run.word == (frozenset({Atom(VISIT, "a")}),)


def test_sequence_cost_is_exact():
    net = _chain()
    assert sequence_cost(net, (0, 1)) == Fraction(5, 2)
    assert sequence_cost(net, ()) == 0


def test_fire_saturates_clamped_places():
    net = PetriNet(
        num_places=2,
        pre=((0,),),
        post=((0, 1),),
        cost=(Fraction(1),),
        labels=(EMPTY, EMPTY),
        initial_marking=(2, 1),
        clamp_at_one=frozenset({1}),
    )
    assert fire(net, (2, 1), 0) == (2, 1)
    assert fire(net, (2, 0), 0) == (2, 1)


def test_construction_rejects_consumed_clamped_place():
    with pytest.raises(ValueError):
        PetriNet(
            num_places=2,
            pre=((1,),),
            post=((0,),),
            cost=(Fraction(1),),
            labels=(EMPTY, EMPTY),
            initial_marking=(0, 1),
            clamp_at_one=frozenset({1}),
        )


@pytest.mark.parametrize("bad", [
    dict(cost=(Fraction(0),)),
    dict(cost=(Fraction(-1),)),
    dict(pre=((),)),
    dict(pre=((0, 0),)),
    dict(post=((5,),)),
    dict(initial_marking=(1,)),
    dict(initial_marking=(1, -1)),
])
def test_construction_rejects_malformed_nets(bad):
    base = dict(
        num_places=2,
        pre=((0,),),
        post=((1,),),
        cost=(Fraction(1),),
        labels=(EMPTY, EMPTY),
        initial_marking=(1, 0),
    )
    base.update(bad)
    with pytest.raises(ValueError):
        PetriNet(**base)


def test_bad_transition_and_marking_are_rejected():
    net = _chain()
    with pytest.raises(ValueError):
        enabled(net, (1, 0, 0), 9)
    with pytest.raises(ValueError):
        fire(net, (1, 0), 0)
