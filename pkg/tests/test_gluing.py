import random

import pytest

from conftest import random_rational

from rewrite_groups.catalog import catalog, dendrite_edge_base
from rewrite_groups.rearrangement import random_rearrangement
from rewrite_groups.replacement import RationalSequence as RS
from rewrite_groups import gluing as gl


def test_interval_automaton_exact():
    aut = gl.build(catalog("interval_F"))
    assert aut.state_count() == 4
    assert aut.transition_count() == 7
    states = {gl._state_str(q) for q in aut.states}
    assert states == {"q0(0)", "q0(1)", "q1(1 in; 1 out)", "q1(1 out; 1 in)"}
    expected = {
        (("q0", "0"), ("s", "s")): ("q0", "1"),
        (("q0", "1"), ("0", "0")): ("q0", "1"),
        (("q0", "1"), ("1", "1")): ("q0", "1"),
        (("q0", "1"), ("0", "1")): ("q1", "1", "in", "1", "out"),
        (("q0", "1"), ("1", "0")): ("q1", "1", "out", "1", "in"),
        (("q1", "1", "in", "1", "out"), ("1", "0")): ("q1", "1", "in", "1", "out"),
        (("q1", "1", "out", "1", "in"), ("0", "1")): ("q1", "1", "out", "1", "in"),
    }
    assert aut.transitions == expected


@pytest.mark.parametrize("n", [3, 4, 5])
def test_dendrite_automaton_exact(n):
    # the single-edge-base variant gives the cleanest automaton
    aut = gl.build(dendrite_edge_base(n))
    assert aut.state_count() == 4
    # (s,s); (i,i) x n; (i,j) x n(n-1); (1,1); (n,n)
    assert aut.transition_count() == 1 + n + n * (n - 1) + 2
    states = {gl._state_str(q) for q in aut.states}
    assert states == {"q0(0)", "q0(1)", "q1(1 out; 1 out)", "q1(1 in; 1 in)"}
    out_out = ("q1", "1", "out", "1", "out")
    in_in = ("q1", "1", "in", "1", "in")
    assert aut.step(out_out, ("1", "1")) == in_in
    assert aut.step(in_in, (str(n), str(n))) == in_in
    assert aut.step(in_in, ("1", "1")) is None
    # the star-base catalog system trims to the same four states
    aut2 = gl.build(catalog("dendrite", n))
    assert {gl._state_str(q) for q in aut2.states} == states


def basilica_expected_rows():
    """The basilica automaton's full transition table, row by row.

    Letters: base L, R; non-loop rule '1' has edges 0, 1, 2 (1 is the red
    loop); loop rule '1~' has edges 1~.0, 1~.1, 1~.2.  Colors: blue = 1,
    red = 1~.
    """
    B, R = "1", "1~"
    t = {}

    def q0(c):
        return ("q0", c)

    def q1(i, g, j, d):
        return ("q1", i, g, j, d)

    # types 0 and 1
    t[(q0("0"), ("L", "L"))] = q0(R)
    t[(q0("0"), ("R", "R"))] = q0(R)
    t[(q0("0"), ("L", "R"))] = q1(R, "lp", R, "lp")
    t[(q0("0"), ("R", "L"))] = q1(R, "lp", R, "lp")
    rows1 = {
        ("0", "0"): q0(B), ("0", "1"): q1(B, "in", R, "lp"),
        ("0", "2"): q1(B, "in", B, "out"), ("1", "0"): q1(R, "lp", B, "in"),
        ("1", "1"): q0(R), ("1", "2"): q1(R, "lp", B, "out"),
        ("2", "0"): q1(B, "out", B, "in"), ("2", "1"): q1(B, "out", R, "lp"),
        ("2", "2"): q0(B),
    }
    for pair, nxt in rows1.items():
        t[(q0(B), pair)] = nxt
    rows2 = {
        ("1~.0", "1~.0"): q0(B), ("1~.0", "1~.1"): q1(B, "in", R, "lp"),
        ("1~.0", "1~.2"): q1(B, "db+", B, "db-"),
        ("1~.1", "1~.0"): q1(R, "lp", B, "in"), ("1~.1", "1~.1"): q0(R),
        ("1~.1", "1~.2"): q1(R, "lp", B, "out"),
        ("1~.2", "1~.0"): q1(B, "db+", B, "db-"),
        ("1~.2", "1~.1"): q1(B, "out", R, "lp"), ("1~.2", "1~.2"): q0(B),
    }
    for pair, nxt in rows2.items():
        t[(q0(R), pair)] = nxt
    # type 2
    t[(q1(R, "lp", R, "lp"), ("1~.0", "1~.0"))] = q1(B, "out", B, "out")
    t[(q1(R, "lp", R, "lp"), ("1~.0", "1~.2"))] = q1(B, "out", B, "in")
    t[(q1(R, "lp", R, "lp"), ("1~.2", "1~.0"))] = q1(B, "in", B, "out")
    t[(q1(R, "lp", R, "lp"), ("1~.2", "1~.2"))] = q1(B, "in", B, "in")
    t[(q1(B, "in", R, "lp"), ("2", "1~.0"))] = q1(B, "in", B, "out")
    t[(q1(B, "in", R, "lp"), ("2", "1~.2"))] = q1(B, "in", B, "in")
    t[(q1(B, "in", B, "out"), ("2", "0"))] = q1(B, "in", B, "out")
    t[(q1(R, "lp", B, "in"), ("1~.0", "2"))] = q1(B, "out", B, "in")
    t[(q1(R, "lp", B, "in"), ("1~.2", "2"))] = q1(B, "in", B, "in")
    t[(q1(R, "lp", B, "out"), ("1~.0", "0"))] = q1(B, "out", B, "out")
    t[(q1(R, "lp", B, "out"), ("1~.2", "0"))] = q1(B, "in", B, "out")
    t[(q1(B, "out", B, "in"), ("0", "2"))] = q1(B, "out", B, "in")
    t[(q1(B, "out", R, "lp"), ("0", "1~.0"))] = q1(B, "out", B, "out")
    t[(q1(B, "out", R, "lp"), ("0", "1~.2"))] = q1(B, "out", B, "in")
    t[(q1(B, "out", B, "out"), ("0", "0"))] = q1(B, "out", B, "out")
    t[(q1(B, "in", B, "in"), ("2", "2"))] = q1(B, "in", B, "in")
    t[(q1(B, "db+", B, "db-"), ("0", "2"))] = q1(B, "out", B, "in")
    t[(q1(B, "db+", B, "db-"), ("2", "0"))] = q1(B, "in", B, "out")
    return t


def test_basilica_automaton_row_for_row():
    aut = gl.build(catalog("basilica"))
    expected = basilica_expected_rows()
    assert aut.transitions == expected
    assert aut.state_count() == 13


def test_gluing_examples_interval():
    I = catalog("interval_F")
    aut = gl.build(I)
    # w 1 0bar ~ w 0 1bar for w = 01
    assert gl.glued(aut, RS.make(("s", "0", "1", "1"), ("0",)),
                    RS.make(("s", "0", "1", "0"), ("1",)))
    assert not gl.glued(aut, RS.make(("s",), ("0",)), RS.make(("s",), ("1",)))


def test_gluing_examples_airplane():
    A = catalog("airplane")
    aut = gl.build(A)
    assert gl.glued(aut, RS.make(("s", "b2"), ("r2",)), RS.make(("s", "b3"), ("r1",)))
    assert not gl.glued(aut, RS.make(("s", "b2"), ("r1",)), RS.make(("s", "b3"), ("r1",)))


def test_glued_rejects_garbage():
    A = catalog("airplane")
    with pytest.raises(gl.NotInSymbolSpace):
        gl.glued(A, RS.make(("s", "b2"), ("b1",)), RS.make(("s",), ("b1",)))


def test_oracle_agreement(rng):
    for name in ["interval_F", "basilica", "airplane", "dendrite:3"]:
        S = catalog(name)
        aut = gl.build(S)
        for _ in range(40):
            a = random_rational(S, rng)
            b = random_rational(S, rng)
            assert gl.glued(aut, a, b) == gl.glued_brute_force(S, a, b), (name, str(a), str(b))


def test_gluing_is_reflexive_symmetric_transitive_sampled(rng):
    for name in ["interval_F", "dendrite:3"]:
        S = catalog(name)
        aut = gl.build(S)
        for _ in range(15):
            a = random_rational(S, rng)
            assert gl.glued(aut, a, a)
            cls = gl.gluing_class(S, a)
            for x in cls:
                for y in cls:
                    assert gl.glued(aut, x, y)


def test_rearrangements_preserve_gluing(rng):
    for name in ["airplane", "basilica"]:
        S = catalog(name)
        aut = gl.build(S)
        for _ in range(15):
            a = random_rational(S, rng)
            b = random_rational(S, rng)
            g = random_rearrangement(S, rng, 2, 1)
            if gl.glued(aut, a, b):
                assert gl.glued(aut, g.apply_rational(a), g.apply_rational(b))


def test_gluing_class_interval_midpoint():
    I = catalog("interval_F")
    cls = gl.gluing_class(I, RS.make(("s", "0"), ("1",)))
    assert {str(x) for x in cls} == {"s 0 (1)", "s 1 (0)"}


def test_gluing_class_endpoint_singleton():
    I = catalog("interval_F")
    cls = gl.gluing_class(I, RS.make(("s",), ("0",)))
    assert {str(x) for x in cls} == {"s (0)"}


def test_gluing_class_dendrite_branch_point():
    D = catalog("dendrite", 3)
    cls = gl.gluing_class(D, RS.make(("1", "1"), ("3",)))
    assert {str(x) for x in cls} == {"1 1 (3)", "2 1 (3)", "3 1 (3)"}


def test_gluing_class_requires_finite_branching():
    from rewrite_groups.graphs import ColoredGraph, Edge
    from rewrite_groups.replacement import ReplacementSystem, Rule

    # the irrational-vertices example: two parallel edges into the middle
    rule = ColoredGraph(["i", "c", "t"], [
        Edge("0", "1", "i", "c"), Edge("1", "1", "i", "c"), Edge("2", "1", "c", "t"),
    ])
    base = ColoredGraph(["x", "y"], [Edge("s", "1", "x", "y")])
    S = ReplacementSystem(["1"], base, {"1": Rule(rule, ("pair", "i", "t"))})
    assert not S.validate().finite_branching_sufficient
    with pytest.raises(gl.FiniteBranchingUnknown):
        gl.gluing_class(S, RS.make(("s",), ("2",)))


def test_automaton_emitters():
    aut = gl.build(catalog("interval_F"))
    dot = gl.automaton_to_dot(aut)
    assert dot.startswith("digraph") and "q0(0)" in dot
    data = gl.automaton_to_json(aut)
    assert len(data["transitions"]) == 7
