import json
import random

import pytest

from conftest import f_generators

from rewrite_groups.catalog import catalog
from rewrite_groups.rearrangement import (
    Rearrangement,
    compose as rcompose,
    identity,
    random_rearrangement,
)
from rewrite_groups.replacement import base_expansion
from rewrite_groups import strand as sd


def test_identity_is_disjoint_strands():
    A = catalog("airplane")
    d = sd.identity_diagram(A)
    assert len(d.strands) == len(A.base.edges)
    assert not d.splits() and not d.merges()


def test_round_trip_f_generator():
    F, x0, _ = f_generators()
    S = sd.from_rearrangement(x0)
    S.validate_r_branching()
    assert S.is_reduced()
    assert sd.to_rearrangement(S) == x0


def test_round_trip_random(rng):
    for name in ["interval_F", "airplane", "basilica", "dendrite:3"]:
        S = catalog(name)
        for i in range(10):
            g = random_rearrangement(S, rng, 2, 2)
            d = sd.from_rearrangement(g)
            d.validate_r_branching()
            assert sd.to_rearrangement(d) == g, (name, i)


def test_not_r_branching_condition_2():
    # a merge mirrored by a split carrying different labels
    A = catalog("airplane")
    nodes = {
        "so1": "source", "so2": "source", "so3": "source",
        "m": ("merge", "r"), "sp": ("split", "r"),
        "si1": "sink", "si2": "sink", "si3": "sink",
    }
    strands = {
        "a": sd.Strand("r", ("v", "a", 1), ("so1", 0), ("m", 0)),
        "b": sd.Strand("r", ("a", "w", 1), ("so2", 0), ("m", 1)),
        "c": sd.Strand("b", ("a", "b", 1), ("so3", 0), ("m", 2)),
        "mid": sd.Strand("r", ("v", "w", 1), ("m", 0), ("sp", 0)),
        "d": sd.Strand("r", ("v", "x", 1), ("sp", 0), ("si1", 0)),
        "e": sd.Strand("r", ("x", "w", 1), ("sp", 1), ("si2", 0)),
        "f": sd.Strand("b", ("x", "y", 1), ("sp", 2), ("si3", 0)),
    }
    # port order must match the red rule: r1, r2, r3 with r3 blue
    d = sd.StrandDiagram(A, nodes, strands,
                         ["so1", "so2", "so3"], ["si1", "si2", "si3"])
    with pytest.raises(sd.NotRBranching) as err:
        d.validate_r_branching()
    assert err.value.condition == 2
    ok, cond, _ = d.r_branching_report()
    assert not ok and cond == 2


def test_not_r_branching_condition_3():
    # the same symbol generated by two splits with different branching labels
    I = catalog("interval_F")
    nodes = {
        "so1": "source", "so2": "source",
        "s1": ("split", "1"), "s2": ("split", "1"),
        "si1": "sink", "si2": "sink", "si3": "sink", "si4": "sink",
    }
    strands = {
        "t1": sd.Strand("1", ("x", "y", 1), ("so1", 0), ("s1", 0)),
        "t2": sd.Strand("1", ("v", "w", 1), ("so2", 0), ("s2", 0)),
        "a": sd.Strand("1", ("x", "b", 1), ("s1", 0), ("si1", 0)),
        "b": sd.Strand("1", ("b", "y", 1), ("s1", 1), ("si2", 0)),
        "c": sd.Strand("1", ("v", "b", 1), ("s2", 0), ("si3", 0)),
        "d": sd.Strand("1", ("b", "w", 1), ("s2", 1), ("si4", 0)),
    }
    d = sd.StrandDiagram(I, nodes, strands,
                         ["so1", "so2"], ["si1", "si2", "si3", "si4"])
    with pytest.raises(sd.NotRBranching) as err:
        d.validate_r_branching()
    assert err.value.condition == 3


def test_type1_minimal_instance():
    # a split directly on top of a matching merge reduces to a single strand
    I = catalog("interval_F")
    nodes = {"so": "source", "sp": ("split", "1"), "m": ("merge", "1"), "si": "sink"}
    strands = {
        "t": sd.Strand("1", ("i", "t", 1), ("so", 0), ("sp", 0)),
        "a": sd.Strand("1", ("i", "c", 1), ("sp", 0), ("m", 0)),
        "b": sd.Strand("1", ("c", "t", 1), ("sp", 1), ("m", 1)),
        "u": sd.Strand("1", ("i", "t", 1), ("m", 0), ("si", 0)),
    }
    d = sd.StrandDiagram(I, nodes, strands, ["so"], ["si"])
    d.validate_r_branching()
    r = d.reduce()
    assert len(r.strands) == 1 and not r.splits()


def test_reduction_confluence_random_orders(rng):
    for name in ["airplane", "basilica"]:
        S = catalog(name)
        for i in range(8):
            g = random_rearrangement(S, rng, 2, 2)
            h = random_rearrangement(S, rng, 2, 2)
            Sg, Sh = sd.from_rearrangement(g), sd.from_rearrangement(h)
            c = sd.compose(Sg, Sh)
            assert c.reduce(random.Random(i)) == c.reduce(random.Random(i + 1000))


def test_composition_homomorphism(rng):
    for name in ["interval_F", "circle_T", "airplane", "dendrite:3"]:
        S = catalog(name)
        for i in range(8):
            g = random_rearrangement(S, rng, 2, 2)
            h = random_rearrangement(S, rng, 2, 2)
            C = sd.compose(sd.from_rearrangement(g), sd.from_rearrangement(h))
            C.validate_r_branching()
            assert sd.to_rearrangement(C) == rcompose(g, h), (name, i)
            assert C == sd.from_rearrangement(rcompose(g, h)), (name, i)


def test_inverse_compose_is_identity(rng):
    A = catalog("airplane")
    for _ in range(6):
        g = random_rearrangement(A, rng, 2, 2)
        S = sd.from_rearrangement(g)
        assert sd.compose(S, sd.invert(S)) == sd.identity_diagram(A)


def test_cut_counts_paths():
    F, x0, _ = f_generators()
    S = sd.from_rearrangement(x0)
    up, low, phi = sd.cut(S)
    assert len(phi) == len(x0.domain.cells)
    assert sorted(phi) == sorted(up.values())


def test_decompose_pure_permutation():
    # identity over a two-edge base twisted by a transposition is M=S=empty
    V = catalog("cantor_V")
    B = base_expansion(V).expand(("s",)).leaf_graph
    exp = base_expansion(V, B)
    cells = list(exp.cells)
    phi = {cells[0]: cells[1], cells[1]: cells[0]}
    g = Rearrangement(exp, phi, exp)
    d = sd.from_rearrangement(g)
    merges, perm, splits = sd.decompose(d)
    assert merges == [] and splits == [] and perm == (1, 0)


def test_decompose_mps_round():
    F, x0, _ = f_generators()
    merges, perm, splits = sd.decompose(sd.from_rearrangement(x0))
    assert splits and merges
    assert sorted(perm) == list(range(len(perm)))


def test_incompatible_composition():
    F, x0, _ = f_generators()
    A = catalog("airplane")
    with pytest.raises(sd.Incompatible):
        sd.compose(sd.from_rearrangement(x0), sd.identity_diagram(A))


def test_json_and_dot():
    F, x0, _ = f_generators()
    S = sd.from_rearrangement(x0)
    data = json.loads(json.dumps(sd.strand_to_json(S)))
    assert sd.strand_from_json(F, data) == S
    dot = sd.strand_to_dot(S)
    assert "invtriangle" in dot and "triangle" in dot
