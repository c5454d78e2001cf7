import random

import pytest

from conftest import f_generators

from rewrite_groups.catalog import BadParams, catalog, tfg
from rewrite_groups.graphs import ColoredGraph, Edge, isomorphisms
from rewrite_groups.rearrangement import (
    Rearrangement,
    compose,
    identity,
    invert,
    random_rearrangement,
)
from rewrite_groups.replacement import (
    GraphExpansion,
    RationalSequence as RS,
    base_expansion,
)
from rewrite_groups import constructions as con
from rewrite_groups import gluing as gl


# -- catalog fidelity -----------------------------------------------------------------


def test_airplane_shape():
    A = catalog("airplane")
    assert len(A.base.edges) == 1 and A.base.edges[0].color == "b"
    blue = A.rules["b"]
    assert len(blue.graph.edges) == 4
    assert [e.color for e in blue.graph.edges] == ["b", "r", "r", "b"]
    red = A.rules["r"]
    assert len(red.graph.edges) == 3
    assert [e.color for e in red.graph.edges] == ["r", "r", "b"]


def test_higman_thompson_f21_equals_interval():
    F = catalog("F", 2, 1)
    I = catalog("interval_F")
    assert F.base.canonical_key() == I.base.canonical_key()
    assert F.rules["1"].graph.canonical_key() == I.rules["1"].graph.canonical_key()


def test_catalog_parameter_validation():
    with pytest.raises(BadParams):
        catalog("dendrite", 2)
    with pytest.raises(BadParams):
        catalog("F", 1, 1)
    with pytest.raises(BadParams):
        catalog("no_such_system")


def test_catalog_validation_flags():
    expanding = ["interval_F", "circle_T", "cantor_V", "airplane", "basilica",
                 "rabbit:2", "dendrite:3", "vicsek:4", "bubble_bath", "trivial_N"]
    for name in expanding:
        assert catalog(name).validate().expanding, name
    # QF/QT/QV, Houghton, the oriented dendrite and single-edge-rule systems
    non_expanding = ["QF", "QT", "QV", "houghton:2", "dendrite_oriented:3",
                     "integers_Z"]
    for name in non_expanding:
        assert not catalog(name).validate().expanding, name


def test_trivial_system_has_only_identity_small_depth():
    N = catalog("trivial_N")

    def expansions_upto(system, steps):
        seen = {base_expansion(system)}
        frontier = [base_expansion(system)]
        for _ in range(steps):
            nxt = []
            for e in frontier:
                for w in e.cells:
                    e2 = e.expand(w)
                    if e2 not in seen:
                        seen.add(e2)
                        nxt.append(e2)
            frontier = nxt
        return seen

    exps = expansions_upto(N, 3)
    count_elements = 0
    for d in exps:
        for r in exps:
            if len(d.cells) != len(r.cells):
                continue
            for iso in isomorphisms(d.leaf_graph, r.leaf_graph):
                phi = {tuple(a.split(" ")): tuple(b.split(" "))
                       for a, b in iso.edge_map.items()}
                g = Rearrangement(d, phi, r)
                assert g.is_identity(), (d, r)
                count_elements += 1
    assert count_elements >= len(exps)


def test_tfg_construction_and_sink_rejection():
    g = ColoredGraph(["p", "q"], [
        Edge("a", "k", "p", "q"), Edge("b", "k", "q", "p"), Edge("c", "k", "q", "q"),
    ])
    S = tfg(g, "p")
    assert set(S.colors) == {"p", "q"}
    assert len(S.rules["q"].graph.edges) == 2
    sink = ColoredGraph(["p", "q"], [Edge("a", "k", "p", "q")])
    with pytest.raises(BadParams):
        tfg(sink, "p")


def test_unglue_airplane_shape():
    A = catalog("airplane")
    U = con.unglue(A)
    blue = U.rules["b"]
    assert all(blue.graph.degree(v) == 1 for v in blue.graph.vertices)
    assert blue.iota == "b1.t" and blue.tau == "b4.t"
    red = U.rules["r"]
    assert red.iota == "r1.s" and red.tau == "r2.t"
    # trivial gluing: distinct sequences never share vertices after divergence
    aut = gl.build(U)
    s1 = RS.make(("s", "b1"), ("b1",))
    s2 = RS.make(("s", "b4"), ("b4",))
    assert not gl.glued(aut, s1, s2)


# -- sums ------------------------------------------------------------------------------


def test_sum_distinct_colors_direct_product():
    T = catalog("circle_T")
    TT = con.sum_systems(T, T)
    assert len(TT.colors) == 2
    assert len(TT.base.edges) == 2
    assert {e.color for e in TT.base.edges} == set(TT.colors)
    # elements act independently on the two loops
    y_left = Rearrangement(
        GraphExpansion(TT, [("a.s", "0"), ("a.s", "1"), ("b.s",)]),
        {("a.s", "0"): ("a.s", "1"), ("a.s", "1"): ("a.s", "0"), ("b.s",): ("b.s",)},
        GraphExpansion(TT, [("a.s", "0"), ("a.s", "1"), ("b.s",)]),
    )
    assert compose(y_left, y_left).is_identity()


def test_sum_shared_colors_wreath():
    T = catalog("circle_T")
    TTs = con.sum_systems(T, T, shared_colors=True)
    assert len(TTs.colors) == 1
    # the loops can be swapped: the base graph has an automorphism exchanging them
    swap = Rearrangement(
        base_expansion(TTs),
        {("a.s",): ("b.s",), ("b.s",): ("a.s",)},
        base_expansion(TTs),
    )
    assert compose(swap, swap).is_identity()


def test_sum_with_trivial_system_keeps_factor(rng):
    F, x0, _ = f_generators()
    N = catalog("trivial_N")
    S = con.sum_systems(F, N)
    # the F factor acts as before on its own letters
    g = Rearrangement(
        GraphExpansion(S, [("a.s", "0", "0"), ("a.s", "0", "1"), ("a.s", "1"), ("b.s",)]),
        {("a.s", "0", "0"): ("a.s", "0"), ("a.s", "0", "1"): ("a.s", "1", "0"),
         ("a.s", "1"): ("a.s", "1", "1"), ("b.s",): ("b.s",)},
        GraphExpansion(S, [("a.s", "0"), ("a.s", "1", "0"), ("a.s", "1", "1"), ("b.s",)]),
    )
    assert not g.is_identity()
    assert compose(g, invert(g)).is_identity()


# -- stabilizers -----------------------------------------------------------------------


def test_airplane_vertex_stabilizer_shape():
    A = catalog("airplane")
    E = base_expansion(A).expand(("s",))
    p = E.cell_edge(("s", "b2")).dst
    marked, cmap = con.stabilizer_vertex(A, E, p)
    assert [(e.name, e.color) for e in marked.base.edges] == [
        ("s b1", "b-"), ("s b2", "r+"), ("s b3", "r-"), ("s b4", "b")]
    assert [(e.name, e.color) for e in marked.rules["b-"].graph.edges] == [
        ("b1", "b+"), ("b2", "r"), ("b3", "r"), ("b4", "b")]
    assert [(e.name, e.color) for e in marked.rules["b+"].graph.edges] == [
        ("b1", "b"), ("b2", "r"), ("b3", "r"), ("b4", "b+")]
    assert [(e.name, e.color) for e in marked.rules["r-"].graph.edges] == [
        ("r1", "r-"), ("r2", "r"), ("r3", "b")]
    assert [(e.name, e.color) for e in marked.rules["r+"].graph.edges] == [
        ("r1", "r"), ("r2", "r+"), ("r3", "b")]
    # plain rules are kept untouched
    assert marked.rules["b"].graph == A.rules["b"].graph


def test_dendrite_rational_stabilizer_shape():
    D = catalog("dendrite", 3)
    marked, cmap = con.stabilizer_rational(D, RS.make(("3",), ("1", "2", "2")))
    assert [(e.name, e.color) for e in marked.base.edges] == [
        ("1", "1"), ("2", "1"), ("3", "g1")]
    assert [(e.name, e.color) for e in marked.rules["g1"].graph.edges] == [
        ("1", "g2"), ("2", "1"), ("3", "1")]
    assert [(e.name, e.color) for e in marked.rules["g2"].graph.edges] == [
        ("1", "1"), ("2", "g3"), ("3", "1")]
    assert [(e.name, e.color) for e in marked.rules["g3"].graph.edges] == [
        ("1", "1"), ("2", "g1"), ("3", "1")]


def test_stabilizer_rational_rejects_vertices():
    D = catalog("dendrite", 3)
    with pytest.raises(con.IsAVertex):
        con.stabilizer_rational(D, RS.make(("1", "1"), ("3",)))


def test_stabilizer_vertex_rejects_unknown():
    A = catalog("airplane")
    E = base_expansion(A)
    with pytest.raises(con.NotAVertex):
        con.stabilizer_vertex(A, E, "nope")


def test_stabilizer_elements_fix_the_point(rng):
    A = catalog("airplane")
    E = base_expansion(A).expand(("s",))
    p = E.cell_edge(("s", "b2")).dst
    marked, cmap = con.stabilizer_vertex(A, E, p)
    reps = gl.gluing_class(A, RS.make(("s", "b2"), ("r2",)))
    assert len(reps) == 3
    for _ in range(15):
        gm = random_rearrangement(marked, rng, 2, 2)
        g = con.transport_element(gm, A, cmap)
        assert {str(g.apply_rational(r)) for r in reps} == {str(r) for r in reps}

    D = catalog("dendrite", 3)
    q = RS.make(("3",), ("1", "2", "2"))
    mD, cmapD = con.stabilizer_rational(D, q)
    for _ in range(15):
        gm = random_rearrangement(mD, rng, 2, 2)
        g = con.transport_element(gm, D, cmapD)
        assert g.apply_rational(q) == q


def test_non_stabilizing_element_moves_point(rng):
    # an ambient element not fixing p is not in the image: its action moves p
    D = catalog("dendrite", 3)
    q = RS.make(("3",), ("1", "2", "2"))
    from rewrite_groups.analysis import dendrite_generators

    tau3 = dendrite_generators(3)["tau3"]
    assert tau3.apply_rational(q) != q


# -- embedding into V -------------------------------------------------------------------


def test_embedding_identity_and_x0():
    F, x0, _ = f_generators()
    emb = con.EmbeddingIntoV(F)
    assert emb(identity(F)).is_identity()
    assert not emb(x0).is_identity()


def test_embedding_homomorphism(rng):
    for name in ["circle_T", "basilica"]:
        S = catalog(name)
        emb = con.EmbeddingIntoV(S)
        for i in range(10):
            a = random_rearrangement(S, rng, 2, 2)
            b = random_rearrangement(S, rng, 2, 2)
            assert emb(compose(a, b)) == compose(emb(a), emb(b)), (name, i)
        for i in range(10):
            a = random_rearrangement(S, rng, 2, 2)
            if not a.is_identity():
                assert not emb(a).is_identity(), (name, i)


def test_binaryfy_cascade_structure():
    # a 4-out-degree vertex becomes a chain of two extra cascade colors
    g = ColoredGraph(["v", "w"], [
        Edge("a", "k", "v", "w"), Edge("b", "k", "v", "w"),
        Edge("c", "k", "v", "w"), Edge("d", "k", "v", "v"),
        Edge("e", "k", "w", "v"), Edge("f", "k", "w", "w"),
    ])
    binary, letter_map = con.binaryfy(g, "v")
    for x in binary.vertices:
        assert binary.out_degree(x) == 2, x
    assert len(letter_map[("v", "a")]) == 1
    assert len(letter_map[("v", "b")]) == 2
    assert len(letter_map[("v", "c")]) == 3
    assert len(letter_map[("v", "d")]) == 3


# -- the integers system ------------------------------------------------------------------


def element_for_integer(Z, z):
    """The rearrangement matching the integer z: pair (E(0,|z|), E(|z|,0))."""

    def expansion(a, b):
        cells = [("s",)]
        w = ("r",)
        for _ in range(a):
            cells += [w + ("0",), w + ("2",)]
            w = w + ("1",)
        cells.append(w)
        v = ("l",)
        for _ in range(b):
            cells += [v + ("0",), v + ("2",)]
            v = v + ("1",)
        cells.append(v)
        return GraphExpansion(Z, cells)

    n = abs(z)
    dom = expansion(0, n) if z >= 0 else expansion(n, 0)
    ran = expansion(n, 0) if z >= 0 else expansion(0, n)
    iso = isomorphisms(dom.leaf_graph, ran.leaf_graph)
    assert len(iso) == 1, "graph pair diagrams of the cycle system are rigid"
    phi = {tuple(a.split(" ")): tuple(b.split(" ")) for a, b in iso[0].edge_map.items()}
    return Rearrangement(dom, phi, ran)


def test_integers_system():
    Z = catalog("integers_Z")
    elems = {z: element_for_integer(Z, z) for z in range(-4, 5)}
    assert elems[0].is_identity()
    # distinct integers are distinct elements (depth-indexed bijection)
    assert len({e for e in elems.values()}) == len(elems)
    rng = random.Random(3)
    for _ in range(40):
        a = rng.randint(-2, 2)
        b = rng.randint(-2, 2)
        assert compose(elems[a], elems[b]) == elems[a + b], (a, b)
    assert invert(elems[3]) == elems[-3]


def test_repaired_catalog_variants():
    for name in ["QF_expanding", "QT_expanding", "QV_expanding", "houghton_expanding:2"]:
        assert catalog(name).validate().expanding, name


def test_dendrite_generalized():
    S = catalog("dendrite_generalized", 4, 3, 6)
    assert len(S.colors) == 3
    rep = S.validate()
    assert rep.expanding and rep.finite_branching_sufficient
    # color i's rule is an s_i-star colored by the next color, cyclically
    sizes = [len(S.rules[c].graph.edges) for c in S.colors]
    assert sizes == [4, 3, 6]
    cyc = {S.rules[S.colors[i]].graph.edges[0].color for i in range(3)}
    assert cyc == {S.colors[1], S.colors[2], S.colors[0]}


def test_binaryfy_system_rules_are_binary():
    g = ColoredGraph(["v", "w"], [
        Edge("a", "k", "v", "w"), Edge("b", "k", "v", "w"),
        Edge("c", "k", "v", "v"), Edge("e", "k", "w", "v"), Edge("f", "k", "w", "w"),
    ])
    sysb, letter_map = con.binaryfy_system(g, "v")
    assert all(len(sysb.rules[c].graph.edges) == 2 for c in sysb.colors)
    assert ("v", "c") in letter_map
