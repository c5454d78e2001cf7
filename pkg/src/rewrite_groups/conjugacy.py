"""Closed strand diagrams and the conjugacy algorithm.

Closing an X-strand diagram glues each sink to the matching source; the glue
points are the base points and cutting at them recovers the open diagram.
Two closed diagrams are similar when they differ by shifts of the cut line
across single splits or merges (base-point order carries no information in
this representation, so permutations are implicit).  Under reduction-confluent
rules every element has a unique reduced similarity class, conjugacy is
similarity of those classes, and a conjugating element is assembled from the
groupoid elements attached to the transformations performed along the way.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Optional

from .graphs import ColoredGraph, Edge
from .replacement import GraphExpansion, ReplacementSystem, base_expansion
from .rearrangement import Rearrangement, compose, conjugate_by, identity, invert
from .strand import Strand, StrandDiagram, from_rearrangement, to_rearrangement

Word = tuple


class NotXDiagram(ValueError):
    pass


class RulesNotConfluent(RuntimeError):
    pass


class NotAdjacent(ValueError):
    pass


class WitnessInvalid(ValueError):
    pass


# -- virtual reductions (augmented rule sets) -----------------------------------------


@dataclass(frozen=True)
class VirtualReduction:
    """An extra graph reduction pattern added to a non-confluent rule set.

    ``lhs`` is the pattern; it is replaced by a single ``rhs_color`` edge from
    ``rhs_src`` to ``rhs_dst``, each either ("vertex", name of an lhs vertex)
    or ("fresh", tag).  ``expansion_map`` exhibits the witness: expanding the
    rhs edge by its color's rule must reproduce the lhs with the edge
    ``expanded_lhs_edge`` expanded; it maps each rule edge of rhs_color either
    to ("edge", lhs edge) or to ("child", lhs edge, rule edge of its color).
    """

    lhs: ColoredGraph
    rhs_color: str
    rhs_src: tuple
    rhs_dst: tuple
    expansion_map: dict


@dataclass(frozen=True)
class AugmentedRules:
    system: ReplacementSystem
    virtual: tuple


def _validate_virtual(system: ReplacementSystem, vr: VirtualReduction):
    """Check the conjugator witness: rhs expansion == lhs with one edge expanded."""
    rule = system.rules[vr.rhs_color]
    targets = [t for t in vr.expansion_map.values() if t[0] == "child"]
    expanded = {t[1] for t in targets}
    if len(expanded) != 1:
        raise WitnessInvalid("exactly one lhs edge must be expanded by the witness")
    mid = expanded.pop()
    mid_color = vr.lhs.edge(mid).color
    mid_rule = system.rules[mid_color]
    if set(vr.expansion_map) != {e.name for e in rule.graph.edges}:
        raise WitnessInvalid("expansion map must cover the rhs rule's edges")
    used = []
    for t in vr.expansion_map.values():
        if t[0] == "edge":
            used.append(("e", t[1]))
        else:
            if t[1] != mid:
                raise WitnessInvalid("children of two different lhs edges used")
            used.append(("c", t[2]))
    lhs_rest = [("e", e.name) for e in vr.lhs.edges if e.name != mid]
    kids = [("c", e.name) for e in mid_rule.graph.edges]
    if sorted(used) != sorted(lhs_rest + kids):
        raise WitnessInvalid("witness does not reproduce the expanded lhs")
    # endpoint consistency: build both graphs and compare up to the mapping
    m = vr.lhs.edge(mid)
    sub = {}
    if mid_rule.kind == "loop":
        sub[mid_rule.iota] = m.src
    else:
        sub[mid_rule.iota], sub[mid_rule.tau] = m.src, m.dst
    host_end = {}
    for e in vr.lhs.edges:
        if e.name != mid:
            host_end[("e", e.name)] = (e.src, e.dst, e.color)
    for e in mid_rule.graph.edges:
        s = sub.setdefault(e.src, ("int", e.src))
        t = sub.setdefault(e.dst, ("int", e.dst))
        host_end[("c", e.name)] = (s, t, e.color)
    # rhs expansion endpoints
    def rhs_end(v):
        if v == rule.iota:
            return ("rhs", "src")
        if rule.kind == "pair" and v == rule.tau:
            return ("rhs", "dst")
        return ("rint", v)

    pair_map = {}
    for e in rule.graph.edges:
        tgt = vr.expansion_map[e.name]
        key = ("e", tgt[1]) if tgt[0] == "edge" else ("c", tgt[2])
        hs, ht, hc = host_end[key]
        if hc != e.color:
            raise WitnessInvalid(f"color mismatch on rhs rule edge {e.name}")
        for a, b in ((rhs_end(e.src), hs), (rhs_end(e.dst), ht)):
            if pair_map.setdefault(a, b) != b:
                raise WitnessInvalid("witness endpoint correspondence inconsistent")
    if len(set(pair_map.values())) != len(pair_map):
        raise WitnessInvalid("witness endpoint correspondence not injective")


def add_virtual_reduction(system: ReplacementSystem, vr: VirtualReduction,
                          base: Optional[AugmentedRules] = None) -> AugmentedRules:
    _validate_virtual(system, vr)
    prev = base.virtual if base is not None else ()
    return AugmentedRules(system, prev + (vr,))


def augment_airplane(system: Optional[ReplacementSystem] = None) -> AugmentedRules:
    """The one extra reduction that repairs the airplane's reduction system.

    A red loop at x carrying a blue edge from x to v (with nothing else at x)
    reduces to a single blue edge out of v; the witness is a red expansion of
    the loop followed by a blue reduction.
    """
    from .catalog import airplane

    system = system if system is not None else airplane()
    lhs = ColoredGraph(["x", "v"], [Edge("loop", "r", "x", "x"), Edge("out", "b", "x", "v")])
    vr = VirtualReduction(
        lhs=lhs,
        rhs_color="b",
        rhs_src=("vertex", "v"),
        rhs_dst=("fresh", "w"),
        expansion_map={
            "b1": ("edge", "out"),
            "b2": ("child", "loop", "r2"),
            "b3": ("child", "loop", "r1"),
            "b4": ("child", "loop", "r3"),
        },
    )
    return add_virtual_reduction(system, vr)


# -- closed diagrams --------------------------------------------------------------------


class ClosedDiagram:
    """A strand diagram closed around the hole; base points are the cut marks.

    Nodes are ("split", c) / ("merge", c) / "bp".  Base points have exactly one
    incoming and one outgoing strand.  The base-point order along the cut line
    is immaterial here: permutations of the base line are similarities and our
    operations never depend on the order, so base points form a plain set.
    """

    def __init__(self, system: ReplacementSystem, nodes: dict, strands: dict,
                 counter: int = 0):
        self.system = system
        self.nodes = dict(nodes)
        self.strands = dict(strands)
        self.counter = counter
        self._index()

    def _index(self):
        self._out, self._in = {}, {}
        for sid, s in self.strands.items():
            self._out.setdefault(s.src[0], {})[s.src[1]] = sid
            self._in.setdefault(s.dst[0], {})[s.dst[1]] = sid
        for nid, kind in self.nodes.items():
            if kind == "bp":
                assert sorted(self._out.get(nid, {})) == [0], f"bp {nid} out"
                assert sorted(self._in.get(nid, {})) == [0], f"bp {nid} in"

    def fresh(self, n=1):
        ids = list(range(self.counter, self.counter + n))
        return ids if n > 1 else ids[0]

    def bps(self):
        return sorted(n for n, k in self.nodes.items() if k == "bp")

    def splits(self):
        return [n for n, k in self.nodes.items() if isinstance(k, tuple) and k[0] == "split"]

    def merges(self):
        return [n for n, k in self.nodes.items() if isinstance(k, tuple) and k[0] == "merge"]

    def out_strand(self, nid, port=0):
        return self._out[nid][port]

    def in_strand(self, nid, port=0):
        return self._in[nid][port]

    def symbols(self):
        out = set()
        for s in self.strands.values():
            out.add(s.label[0])
            out.add(s.label[1])
        return out

    def fresh_symbols(self, n):
        taken = self.symbols()
        out = []
        i = 0
        while len(out) < n:
            c = f"z{i}"
            if c not in taken:
                out.append(c)
                taken.add(c)
            i += 1
        return out

    # -- base graph and opening ------------------------------------------------------

    def base_graph(self) -> ColoredGraph:
        """The graph spelled by the strands leaving the base points."""
        verts = []
        edges = []
        for b in self.bps():
            s = self.strands[self.out_strand(b)]
            v, w, _ = s.label
            for x in (f"v{v}", f"v{w}"):
                if x not in verts:
                    verts.append(x)
            edges.append(Edge(str(b), s.color, f"v{v}", f"v{w}"))
        return ColoredGraph(verts, edges)

    def open_diagram(self) -> StrandDiagram:
        nodes = {}
        strands = {}
        sources, sinks = [], []
        for nid, kind in self.nodes.items():
            if kind == "bp":
                nodes[("so", nid)] = "source"
                nodes[("si", nid)] = "sink"
            else:
                nodes[nid] = kind
        for b in self.bps():
            sources.append(("so", b))
            sinks.append(("si", b))
        for sid, s in self.strands.items():
            src = (("so", s.src[0]), 0) if self.nodes[s.src[0]] == "bp" else s.src
            dst = (("si", s.dst[0]), 0) if self.nodes[s.dst[0]] == "bp" else s.dst
            strands[sid] = Strand(s.color, s.label, src, dst)
        return StrandDiagram(self.system, nodes, strands, sources, sinks)

    def open_element(self) -> Rearrangement:
        b = self.base_graph()
        return to_rearrangement(self.open_diagram(), b, b)

    # -- canonical key -----------------------------------------------------------------

    def canonical_key(self) -> tuple:
        """Key invariant under node/strand ids and symbol renaming.

        Components are traversed in the order of their componentwise-least row
        sequences with one shared symbol table, so sharing of symbols across
        components is part of the key; tied components are tried in every
        order and the least overall key wins.
        """
        key, _order = self._canonical_traversal()
        return key

    def _canonical_traversal(self):
        comps = self.components()
        locals_ = []
        for c in comps:
            best = None
            anchors = []
            for a in sorted(c, key=repr):
                rows = tuple(self._rows_from(a))
                if best is None or rows < best:
                    best = rows
                    anchors = [a]
                elif rows == best:
                    anchors.append(a)
            locals_.append((best, anchors, c))
        locals_.sort(key=lambda x: x[0])
        groups = []
        for lk, anchors, c in locals_:
            if groups and groups[-1][0] == lk:
                groups[-1][1].append((anchors, c))
            else:
                groups.append((lk, [(anchors, c)]))
        best_key = None
        best_order = None

        def emit(sequence):
            sym_ids: dict = {}
            rows_all = []
            node_order = []
            for anchor in sequence:
                rows = self._rows_from(anchor, sym_ids, node_order)
                rows_all.append(tuple(rows))
            return tuple(rows_all), node_order

        import itertools as _it

        choices_per_group = []
        for _lk, members in groups:
            if len(members) == 1:
                choices_per_group.append([ [members[0][0][0]] ] if len(members[0][0]) == 1
                                         else [[a] for a in members[0][0]])
            else:
                perms = _it.permutations(members) if len(members) <= 4 else [tuple(members)]
                opts = []
                for perm in perms:
                    anchor_lists = [m[0] for m in perm]
                    for combo in _it.product(*anchor_lists):
                        opts.append(list(combo))
                choices_per_group.append(opts)
        for combo in _it.product(*choices_per_group):
            seq = [a for part in combo for a in part]
            key, order = emit(seq)
            if best_key is None or key < best_key:
                best_key = key
                best_order = order
        return best_key if best_key is not None else (), best_order or []

    def _rows_from(self, start_sid, sym_ids: Optional[dict] = None,
                   node_order: Optional[list] = None) -> list:
        node_ids: dict = {}
        if sym_ids is None:
            sym_ids = {}
        rows = []
        seen = set()
        queue = [start_sid]

        def nsym(x):
            return sym_ids.setdefault(x, len(sym_ids))

        def nid_of(n):
            if n not in node_ids:
                node_ids[n] = len(node_ids)
                if node_order is not None:
                    kind = self.nodes[n]
                    node_order.append((n, "bp" if kind == "bp" else kind))
                kind = self.nodes[n]
                if kind == "bp":
                    queue.append(self.out_strand(n))
                    queue.append(self.in_strand(n))
                elif kind[0] == "split":
                    queue.append(self.in_strand(n))
                    for p in range(len(self.system.rules[kind[1]].graph.edges)):
                        queue.append(self.out_strand(n, p))
                else:
                    queue.append(self.out_strand(n))
                    for p in range(len(self.system.rules[kind[1]].graph.edges)):
                        queue.append(self.in_strand(n, p))
            return node_ids[n]

        while queue:
            sid = queue.pop(0)
            if sid in seen:
                continue
            seen.add(sid)
            s = self.strands[sid]
            ku, kd = self.nodes[s.src[0]], self.nodes[s.dst[0]]
            # the z index is determined by port structure where it matters
            # and is meaningless across expansions, so it is not part of keys
            rows.append((
                nid_of(s.src[0]), s.src[1], nid_of(s.dst[0]), s.dst[1],
                "bp" if ku == "bp" else ku[0], "bp" if kd == "bp" else kd[0],
                s.color, nsym(s.label[0]), nsym(s.label[1]),
            ))
        return rows

    def _component_strands(self, sid) -> set:
        seen = set()
        queue = [sid]
        while queue:
            x = queue.pop()
            if x in seen:
                continue
            seen.add(x)
            s = self.strands[x]
            for n in (s.src[0], s.dst[0]):
                queue.extend(self._out.get(n, {}).values())
                queue.extend(self._in.get(n, {}).values())
        return seen

    def components(self) -> list:
        rest = sorted(self.strands, key=repr)
        out = []
        while rest:
            comp = self._component_strands(rest[0])
            out.append(comp)
            rest = [x for x in rest if x not in comp]
        return out

    def __eq__(self, other):
        return (isinstance(other, ClosedDiagram) and self.system is other.system
                and self.canonical_key() == other.canonical_key())

    def __hash__(self):
        return hash(self.canonical_key())

    def __repr__(self):
        return (f"ClosedDiagram({len(self.bps())} base points, "
                f"{len(self.splits())} splits, {len(self.merges())} merges)")


def close(d: StrandDiagram) -> ClosedDiagram:
    """Attach each sink to the source in the same position."""
    if len(d.sources) != len(d.sinks):
        raise NotXDiagram("source and sink counts differ")
    for (v1, w1, _), (v2, w2, _), c1, c2 in zip(
        d.source_labels(), d.sink_labels(), d.source_colors(), d.sink_colors()
    ):
        if c1 != c2:
            raise NotXDiagram("source and sink colors differ")
    m: dict = {}
    for (v1, w1, _), (v2, w2, _) in zip(d.source_labels(), d.sink_labels()):
        for a, b in ((v2, v1), (w2, w1)):
            if m.setdefault(a, b) != b:
                raise NotXDiagram("sources and sinks spell different graphs")
    if len(set(m.values())) != len(m):
        raise NotXDiagram("sources and sinks spell different graphs")
    nodes = {}
    remap = {}
    counter = 0
    for i, (so, si) in enumerate(zip(d.sources, d.sinks)):
        nodes[counter] = "bp"
        remap[so] = counter
        remap[si] = counter
        counter += 1
    for nid, kind in d.nodes.items():
        if kind in ("source", "sink"):
            continue
        nodes[("n", counter)] = kind
        remap[nid] = ("n", counter)
        counter += 1
    strands = {}
    for sid, s in d.strands.items():
        strands[sid] = Strand(s.color, s.label,
                              (remap[s.src[0]], s.src[1]), (remap[s.dst[0]], s.dst[1]))
    return ClosedDiagram(d.system, nodes, strands, counter)


def close_element(g: Rearrangement) -> ClosedDiagram:
    return close(from_rearrangement(g))


# -- moves ----------------------------------------------------------------------------
#
# Every move returns (new_diagram, conjugator) where the conjugator is a
# generalized rearrangement E between expansions of the old and new base
# graphs with o(new) = E^-1 o(old) E (checked by the tests in both roles, see
# _expansion_element for the orientation actually constructed).


def _instantiate(system, color, v, w, fresh_syms):
    """Labels of a replacement tree copy with branching endpoints (v, w)."""
    rule = system.rules[color]
    sub = {}
    if rule.kind == "loop":
        assert v == w
        sub[rule.iota] = v
    else:
        sub[rule.iota], sub[rule.tau] = v, w
    fresh = iter(fresh_syms)
    labels = []
    for e in rule.graph.edges:
        for x in (e.src, e.dst):
            if x not in sub:
                sub[x] = next(fresh)
        labels.append((sub[e.src], sub[e.dst], rule.graph.parallel_index(e.name)))
    return labels


def _match_instance(system, color, labels):
    """If labels form a faithful copy of color's tree, return (v, w, sub)."""
    rule = system.rules[color]
    sub: dict = {}
    for e, (a, b, _z) in zip(rule.graph.edges, labels):
        for rv, sym in ((e.src, a), (e.dst, b)):
            if sub.setdefault(rv, sym) != sym:
                return None
    # injective except that iota and tau coincide when the edge is a loop
    collisions = len(sub) - len(set(sub.values()))
    if collisions > 1:
        return None
    if collisions == 1:
        if rule.kind != "pair" or sub.get(rule.iota) != sub.get(rule.tau):
            return None
    groups: dict = {}
    for e, (a, b, z) in zip(rule.graph.edges, labels):
        groups.setdefault((a, b), []).append(z)
    for zs in groups.values():
        if len(set(zs)) != len(zs):
            return None
    v = sub[rule.iota]
    w = sub[rule.iota] if rule.kind == "loop" else sub[rule.tau]
    return v, w, sub


def _expansion_element(system: ReplacementSystem, old_base: ColoredGraph,
                       new_base: ColoredGraph, letter: str, child_names: list) -> Rearrangement:
    """The groupoid element identifying Omega(new base) with Omega(old base).

    ``letter``'s cone in the old base is split; child ``child_names[i]`` of the
    new base corresponds to the word (letter, rule edge i) of the old base.
    """
    color = old_base.edge(letter).color
    rule = system.rules[color]
    phi = {}
    for e in old_base.edges:
        if e.name != letter:
            phi[(e.name,)] = (e.name,)
    for name, e in zip(child_names, rule.graph.edges):
        phi[(name,)] = (letter, e.name)
    dom = base_expansion(system, new_base)
    ran = GraphExpansion(system, list(phi.values()), old_base)
    return Rearrangement(dom, phi, ran)


class Move:
    """A performed transformation plus its conjugator data."""

    def __init__(self, kind, diagram, conj):
        self.kind = kind
        self.diagram = diagram
        self.conj = conj  # None (element unchanged) or Rearrangement


def _repair_cond2(d: ClosedDiagram, fresh: set) -> ClosedDiagram:
    """Rename freshly generated symbols forced by merge-above-split adjacency.

    A shift relabels the moved node with fresh interior symbols; when the move
    leaves a merge feeding a split directly, the R-branching condition on
    mirrored chains forces those labels to agree with the neighbour's, so the
    fresh symbols are renamed rather than kept.
    """
    while True:
        renaming: dict = {}
        for sid, s in d.strands.items():
            ku, kd = d.nodes[s.src[0]], d.nodes[s.dst[0]]
            if not (isinstance(ku, tuple) and ku[0] == "merge"
                    and isinstance(kd, tuple) and kd[0] == "split"
                    and s.src[1] == 0 and s.dst[1] == 0 and ku[1] == kd[1]):
                continue
            arity = len(d.system.rules[ku[1]].graph.edges)
            for p in range(arity):
                a = d.strands[d.in_strand(s.src[0], p)].label
                b = d.strands[d.out_strand(s.dst[0], p)].label
                for x, y in ((a[0], b[0]), (a[1], b[1])):
                    if x == y:
                        continue
                    if x in fresh:
                        renaming[x] = y
                    elif y in fresh:
                        renaming[y] = x
        if not renaming:
            return d
        strands = {
            sid: replace(s, label=(renaming.get(s.label[0], s.label[0]),
                                   renaming.get(s.label[1], s.label[1]),
                                   s.label[2]))
            for sid, s in d.strands.items()
        }
        fresh = fresh - set(renaming)
        d = ClosedDiagram(d.system, d.nodes, strands, d.counter)


def shift_down_split(d: ClosedDiagram, bp) -> Move:
    """Expanding shift: the split fed by this base point rises above the line."""
    out = d.strands[d.out_strand(bp)]
    snode = out.dst[0]
    kind = d.nodes[snode]
    if not (isinstance(kind, tuple) and kind[0] == "split" and out.dst[1] == 0):
        raise NotAdjacent("base point does not feed a split")
    color = kind[1]
    rule = d.system.rules[color]
    arity = len(rule.graph.edges)
    up = d.strands[d.in_strand(bp)]
    old_base = d.base_graph()
    nodes = dict(d.nodes)
    strands = dict(d.strands)
    counter = d.counter
    fresh = d.fresh_symbols(len(rule.graph.vertices))
    new_labels = _instantiate(d.system, color, up.label[0], up.label[1], fresh)
    del nodes[bp]
    up_sid = d.in_strand(bp)
    strands[up_sid] = replace(up, dst=(snode, 0))
    del strands[d.out_strand(bp)]
    new_bps = []
    for p in range(arity):
        nb = counter
        counter += 1
        nodes[nb] = "bp"
        new_bps.append(nb)
        child_sid = d.out_strand(snode, p)
        child = strands[child_sid]
        strands[("u", nb)] = Strand(child.color, new_labels[p], (snode, p), (nb, 0))
        strands[child_sid] = replace(child, src=(nb, 0))
    out_diag = _repair_cond2(ClosedDiagram(d.system, nodes, strands, counter), set(fresh))
    new_base = out_diag.base_graph()
    conj = _expansion_element(d.system, old_base, new_base, str(bp),
                              [str(b) for b in new_bps])
    return Move("shift_down_split", out_diag, conj)


def shift_up_split(d: ClosedDiagram, snode) -> Move:
    """Reducing shift: the split sinks below the line (inverse of the above)."""
    kind = d.nodes[snode]
    color = kind[1]
    rule = d.system.rules[color]
    arity = len(rule.graph.edges)
    bps = []
    lowers = []
    for p in range(arity):
        s = d.strands[d.out_strand(snode, p)]
        if d.nodes.get(s.dst[0]) != "bp":
            raise NotAdjacent("split children do not all end at base points")
        bps.append(s.dst[0])
        lowers.append(d.strands[d.out_strand(s.dst[0])])
    if len(set(bps)) != arity:
        raise NotAdjacent("children share base points")
    m = _match_instance(d.system, color, [s.label for s in lowers])
    if m is None:
        raise NotAdjacent("labels below the line are not a faithful copy")
    v, w, _sub = m
    old_base = d.base_graph()
    nodes = dict(d.nodes)
    strands = dict(d.strands)
    counter = d.counter
    nb = counter
    counter += 1
    nodes[nb] = "bp"
    up_sid = d.in_strand(snode)
    up = d.strands[up_sid]
    strands[up_sid] = replace(up, dst=(nb, 0))
    strands[("d", nb)] = Strand(up.color, (v, w, up.label[2]), (nb, 0), (snode, 0))
    for p in range(arity):
        child_sid = d.out_strand(snode, p)
        bp = bps[p]
        low_sid = d.out_strand(bp)
        del strands[child_sid]
        del nodes[bp]
        strands[low_sid] = replace(strands[low_sid], src=(snode, p))
    out_diag = ClosedDiagram(d.system, nodes, strands, counter)
    new_base = out_diag.base_graph()
    conj = _expansion_element(d.system, new_base, old_base, str(nb),
                              [str(b) for b in bps])
    return Move("shift_up_split", out_diag, invert(conj))


def shift_up_merge(d: ClosedDiagram, bp) -> Move:
    """Expanding shift: the merge feeding this base point sinks below the line."""
    up = d.strands[d.in_strand(bp)]
    mnode = up.src[0]
    kind = d.nodes[mnode]
    if not (isinstance(kind, tuple) and kind[0] == "merge" and up.src[1] == 0):
        raise NotAdjacent("base point is not fed by a merge")
    color = kind[1]
    rule = d.system.rules[color]
    arity = len(rule.graph.edges)
    low = d.strands[d.out_strand(bp)]
    old_base = d.base_graph()
    nodes = dict(d.nodes)
    strands = dict(d.strands)
    counter = d.counter
    fresh = d.fresh_symbols(len(rule.graph.vertices))
    new_labels = _instantiate(d.system, color, low.label[0], low.label[1], fresh)
    del nodes[bp]
    low_sid = d.out_strand(bp)
    strands[low_sid] = replace(low, src=(mnode, 0))
    del strands[d.in_strand(bp)]
    new_bps = []
    for p in range(arity):
        nb = counter
        counter += 1
        nodes[nb] = "bp"
        new_bps.append(nb)
        in_sid = d.in_strand(mnode, p)
        top = strands[in_sid]
        strands[in_sid] = replace(top, dst=(nb, 0))
        strands[("d", nb)] = Strand(top.color, new_labels[p], (nb, 0), (mnode, p))
    out_diag = _repair_cond2(ClosedDiagram(d.system, nodes, strands, counter), set(fresh))
    new_base = out_diag.base_graph()
    conj = _expansion_element(d.system, old_base, new_base, str(bp),
                              [str(b) for b in new_bps])
    return Move("shift_up_merge", out_diag, conj)


def shift_down_merge(d: ClosedDiagram, mnode) -> Move:
    """Reducing shift: the merge rises above the line (inverse of the above)."""
    kind = d.nodes[mnode]
    color = kind[1]
    rule = d.system.rules[color]
    arity = len(rule.graph.edges)
    bps = []
    uppers = []
    for p in range(arity):
        s = d.strands[d.in_strand(mnode, p)]
        if d.nodes.get(s.src[0]) != "bp":
            raise NotAdjacent("merge inputs do not all start at base points")
        bps.append(s.src[0])
        uppers.append(d.strands[d.in_strand(s.src[0])])
    if len(set(bps)) != arity:
        raise NotAdjacent("inputs share base points")
    m = _match_instance(d.system, color, [s.label for s in uppers])
    if m is None:
        raise NotAdjacent("labels above the line are not a faithful copy")
    v, w, _sub = m
    old_base = d.base_graph()
    nodes = dict(d.nodes)
    strands = dict(d.strands)
    counter = d.counter
    nb = counter
    counter += 1
    nodes[nb] = "bp"
    out_sid = d.out_strand(mnode)
    out = d.strands[out_sid]
    strands[out_sid] = replace(out, src=(nb, 0))
    strands[("u", nb)] = Strand(out.color, (v, w, out.label[2]), (mnode, 0), (nb, 0))
    for p in range(arity):
        in_sid = d.in_strand(mnode, p)
        bp = bps[p]
        up_sid = d.in_strand(bp)
        del strands[in_sid]
        del nodes[bp]
        strands[up_sid] = replace(strands[up_sid], dst=(mnode, p))
    out_diag = ClosedDiagram(d.system, nodes, strands, counter)
    new_base = out_diag.base_graph()
    conj = _expansion_element(d.system, new_base, old_base, str(nb),
                              [str(b) for b in bps])
    return Move("shift_down_merge", out_diag, invert(conj))


def _flippable_loop_colors(system, d, sids) -> bool:
    """All strands of the loop have undirected colors with involutive psi."""
    for sid in sids:
        color = d.strands[sid].color
        psi = system.reversing_automorphism(color)
        if psi is None:
            return False
        em = psi.edge_map
        if any(em[em[e]] != e for e in em):
            return False
    return True


def flip_loop(d: ClosedDiagram, bps: tuple) -> Move:
    """Reverse the orientation of a whole pure loop of undirected cells.

    Conjugating by the product of the one-cell orientation reversals along the
    loop leaves a prefix-exchange cycle, so this is a similarity move for
    undirected colors; psi must be an involution for the flip to stay cellwise.
    """
    loops = {tuple(b): (b, ss) for b, ss in pure_loops(d)}
    key = tuple(bps)
    if key not in loops:
        raise NotAdjacent("not a pure loop")
    b_list, sids = loops[key]
    if not _flippable_loop_colors(d.system, d, sids):
        raise NotAdjacent("loop colors are not (involutively) undirected")
    old_base = d.base_graph()
    strands = dict(d.strands)
    for sid in sids:
        st = strands[sid]
        strands[sid] = replace(st, label=(st.label[1], st.label[0], st.label[2]))
    out_diag = ClosedDiagram(d.system, d.nodes, strands, d.counter)
    new_base = out_diag.base_graph()
    # conjugator: each flipped letter's cone maps through psi one level down
    phi = {}
    system = d.system
    flipped = set(str(b) for b in b_list)
    for e in new_base.edges:
        if e.name not in flipped:
            phi[(e.name,)] = (e.name,)
    for b in b_list:
        letter = str(b)
        color = old_base.edge(letter).color
        psi = system.reversing_automorphism(color).edge_map
        for x in system.rules[color].graph.edges:
            phi[(letter, x.name)] = (letter, psi[x.name])
    dom = GraphExpansion(system, list(phi), new_base)
    ran = GraphExpansion(system, list(phi.values()), old_base)
    conj = Rearrangement(dom, phi, ran)
    return Move("flip_loop", out_diag, conj)


def all_flips(d: ClosedDiagram) -> list:
    out = []
    for b, ss in pure_loops(d):
        if _flippable_loop_colors(d.system, d, ss):
            out.append(("flip_loop", tuple(b)))
    return out


def permute(d: ClosedDiagram, order=None) -> ClosedDiagram:
    """Reorder the base line.

    Base points carry no order in this representation (any ordering of the
    cut marks is a similarity), so permutations return an equal diagram; the
    operation exists so that the three transformation kinds of the calculus
    are all addressable.
    """
    return ClosedDiagram(d.system, d.nodes, d.strands, d.counter)


def all_shifts(d: ClosedDiagram) -> list:
    out = []
    for bp in d.bps():
        s = d.strands[d.out_strand(bp)]
        kind = d.nodes[s.dst[0]]
        if isinstance(kind, tuple) and kind[0] == "split" and s.dst[1] == 0:
            out.append(("shift_down_split", bp))
        u = d.strands[d.in_strand(bp)]
        kind = d.nodes[u.src[0]]
        if isinstance(kind, tuple) and kind[0] == "merge" and u.src[1] == 0:
            out.append(("shift_up_merge", bp))
    for snode in d.splits():
        try:
            shift_up_split(d, snode)
            out.append(("shift_up_split", snode))
        except NotAdjacent:
            pass
    for mnode in d.merges():
        try:
            shift_down_merge(d, mnode)
            out.append(("shift_down_merge", mnode))
        except NotAdjacent:
            pass
    return out


def apply_shift(d: ClosedDiagram, move) -> Move:
    kind, target = move
    return globals()[kind](d, target)


def all_similarity_moves(d: ClosedDiagram) -> list:
    return all_shifts(d) + all_flips(d)


# -- type 1/2 reductions on closed diagrams ------------------------------------------


def _closed_type1(d: ClosedDiagram):
    for snode in d.splits():
        color = d.nodes[snode][1]
        arity = len(d.system.rules[color].graph.edges)
        targets = set()
        ok = True
        for p in range(arity):
            s = d.strands[d.out_strand(snode, p)]
            k = d.nodes[s.dst[0]]
            if not (isinstance(k, tuple) and k[0] == "merge" and s.dst[1] == p):
                ok = False
                break
            targets.add(s.dst[0])
        if ok and len(targets) == 1 and d.nodes[targets.copy().pop()][1] == color:
            yield (snode, targets.pop())


def _closed_type2(d: ClosedDiagram):
    for sid, s in d.strands.items():
        ku, kd = d.nodes[s.src[0]], d.nodes[s.dst[0]]
        if (isinstance(ku, tuple) and ku[0] == "merge" and s.src[1] == 0
                and isinstance(kd, tuple) and kd[0] == "split" and s.dst[1] == 0
                and ku[1] == kd[1]):
            yield (s.src[0], s.dst[0])


def reduce_type1(d: ClosedDiagram, snode, mnode) -> ClosedDiagram:
    color = d.nodes[snode][1]
    arity = len(d.system.rules[color].graph.edges)
    nodes = dict(d.nodes)
    strands = dict(d.strands)
    top_sid = d.in_strand(snode)
    bottom = d.strands[d.out_strand(mnode)]
    for p in range(arity):
        del strands[d.out_strand(snode, p)]
    del strands[d.out_strand(mnode)]
    if top_sid in strands:
        strands[top_sid] = replace(strands[top_sid], dst=bottom.dst)
    del nodes[snode]
    del nodes[mnode]
    # a split directly closing onto its own merge leaves a free loop through
    # base points only when the surrounding strands survive; if the top strand
    # was the bottom strand we would have a strand from the merge to the split,
    # which the candidate scan excludes.
    return ClosedDiagram(d.system, nodes, strands, d.counter)


def reduce_type2(d: ClosedDiagram, mnode, snode) -> ClosedDiagram:
    color = d.nodes[mnode][1]
    arity = len(d.system.rules[color].graph.edges)
    nodes = dict(d.nodes)
    strands = dict(d.strands)
    shared = d.out_strand(mnode)
    for p in range(arity):
        a = d.in_strand(mnode, p)
        b = d.out_strand(snode, p)
        if d.strands[a].label != d.strands[b].label:
            raise NotAdjacent("type 2 with unequal labels")
        strands[a] = replace(strands[a], dst=d.strands[b].dst)
        del strands[b]
    del strands[shared]
    del nodes[mnode]
    del nodes[snode]
    return ClosedDiagram(d.system, nodes, strands, d.counter)


# -- pure loops and type 3 ----------------------------------------------------------


def pure_loops(d: ClosedDiagram) -> list:
    """Cycles passing only through base points: [(bp list, strand list)]."""
    seen = set()
    out = []
    for b in d.bps():
        if b in seen:
            continue
        bps = [b]
        strands = []
        cur = b
        closed_loop = False
        while True:
            sid = d.out_strand(cur)
            s = d.strands[sid]
            nxt = s.dst[0]
            if d.nodes[nxt] != "bp":
                break
            strands.append(sid)
            if nxt == b:
                closed_loop = True
                break
            bps.append(nxt)
            cur = nxt
        if closed_loop and len(strands) == len(bps):
            out.append((bps, strands))
            seen.update(bps)
    return out


def _loop_label(d, strands, offset, r):
    sid = strands[(offset + r) % len(strands)]
    return d.strands[sid].label, d.strands[sid].color


def _type3_matches(d: ClosedDiagram, pattern_edges, winding_loops):
    """Assign loop variants and rotations to pattern edges, block by block.

    ``winding_loops`` entries are (bps, strand ids, flipped); all have the same
    length w.  Yields (assignment, subs): assignment lists (variant index,
    rotation) per pattern edge, subs are the per-block vertex substitutions.
    """
    k = len(pattern_edges)
    loops = winding_loops
    w = len(loops[0][1])

    def label_at(li, off, r):
        bps, sids, flipped = loops[li]
        s = d.strands[sids[(off + r) % w]]
        a, b = s.label[0], s.label[1]
        if flipped:
            a, b = b, a
        return (a, b), s.color

    def rec(i, used, subs, assign):
        if i == k:
            yield list(assign), [dict(x) for x in subs]
            return
        e = pattern_edges[i]
        for li in range(len(loops)):
            if li in used:
                continue
            for off in range(w):
                trial = [dict(x) for x in subs]
                ok = True
                for r in range(w):
                    (a, b), color = label_at(li, off, r)
                    if color != e.color:
                        ok = False
                        break
                    for rv, sym in ((e.src, a), (e.dst, b)):
                        if trial[r].setdefault(rv, sym) != sym:
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    continue
                yield from rec(i + 1, used | {li}, trial, assign + [(li, off)])

    yield from rec(0, set(), [dict() for _ in range(w)], [])


def _symbols_outside(d: ClosedDiagram, strand_ids: set) -> set:
    out = set()
    for sid, s in d.strands.items():
        if sid not in strand_ids:
            out.add(s.label[0])
            out.add(s.label[1])
    return out


def find_type3(d: ClosedDiagram, virtual: tuple = (), allow_flips: bool = False, rng=None):
    """First applicable type 3 reduction, trying base rules then virtual ones.

    With ``allow_flips`` the search may reverse whole pure loops of undirected
    colors first; the returned match then carries the flips to perform.
    """
    loops = pure_loops(d)
    if not loops:
        return None
    variants = []
    for bps, sids in loops:
        variants.append((bps, sids, False))
        if allow_flips and _flippable_loop_colors(d.system, d, sids):
            variants.append((bps, sids, True))
    by_len: dict = {}
    for bps, sids, flipped in variants:
        by_len.setdefault(len(sids), []).append((bps, sids, flipped))
    patterns = []
    for color in d.system.colors:
        rule = d.system.rules[color]
        if len(rule.graph.edges) < 2:
            continue  # single-edge rules rewrite nothing
        patterns.append(("rule", color, list(rule.graph.edges), rule))
    for vr in virtual:
        patterns.append(("virtual", vr, list(vr.lhs.edges), None))
    if rng is not None:
        rng.shuffle(patterns)
    for w, cand in sorted(by_len.items()):
        if rng is not None:
            cand = list(cand)
            rng.shuffle(cand)
        for tag, key, edges, rule in patterns:
            if len({tuple(c[0]) for c in cand}) < len(edges):
                continue
            for assign, subs in _type3_matches(d, edges, cand):
                involved = set()
                flips = set()
                used_bps = set()
                clash = False
                for li, _off in assign:
                    bps, sids, flipped = cand[li]
                    if tuple(bps) in used_bps:
                        clash = True
                        break
                    used_bps.add(tuple(bps))
                    involved.update(sids)
                    if flipped:
                        flips.add(tuple(bps))
                if clash:
                    continue
                outside = _symbols_outside(d, involved)
                if tag == "rule":
                    keep = {rule.iota} | ({rule.tau} if rule.kind == "pair" else set())
                else:
                    keep = set()
                    for end in (key.rhs_src, key.rhs_dst):
                        if end[0] == "vertex":
                            keep.add(end[1])
                deleted = set()
                kept_syms = set()
                for sub in subs:
                    for rv, sym in sub.items():
                        if rv not in keep:
                            deleted.add(sym)
                        else:
                            kept_syms.add(sym)
                if deleted & (outside | kept_syms):
                    continue
                return (tag, key, edges, rule, assign, subs, cand, w, flips)
    return None


def apply_type3(d: ClosedDiagram, match) -> Move:
    tag, key, edges, rule, assign, subs, cand, w, flips = match
    assert not flips, "apply flips before applying the reduction" 
    system = d.system
    old_base = d.base_graph()
    nodes = dict(d.nodes)
    strands = dict(d.strands)
    counter = d.counter
    # remove the matched loops
    for li, _off in assign:
        bps, sids, _fl = cand[li]
        for b in bps:
            del nodes[b]
        for sid in sids:
            del strands[sid]
    new_bps = []
    fresh_syms = iter(d.fresh_symbols(w))
    labels = []
    if tag == "rule":
        color = key
        for r in range(w):
            v = subs[r][rule.iota]
            u = v if rule.kind == "loop" else subs[r][rule.tau]
            labels.append((v, u, 1))
    else:
        color = key.rhs_color
        for r in range(w):
            def end_sym(end):
                if end[0] == "vertex":
                    return subs[r][end[1]]
                return next(fresh_syms)
            labels.append((end_sym(key.rhs_src), end_sym(key.rhs_dst), 1))
    for r in range(w):
        nb = counter
        counter += 1
        nodes[nb] = "bp"
        new_bps.append(nb)
    for r in range(w):
        strands[("t3", new_bps[r])] = Strand(
            color, labels[r], (new_bps[r], 0), (new_bps[(r + 1) % w], 0)
        )
    out_diag = ClosedDiagram(system, nodes, strands, counter)
    # conjugator: expansions of each new letter spell out the removed letters
    new_base = out_diag.base_graph()
    phi = {}
    for e in new_base.edges:
        if int(e.name) not in new_bps:
            phi[(e.name,)] = (e.name,)
    rng_cells = set(w_ for w_ in phi.values())
    if tag == "rule":
        rule_edges = system.rules[color].graph.edges
        for r in range(w):
            for i, re in enumerate(rule_edges):
                li, off = assign[i]
                bps, sids, _fl = cand[li]
                target_bp = bps[(off + r) % w]
                phi[(str(new_bps[r]), re.name)] = (str(target_bp),)
    else:
        rule_edges = system.rules[color].graph.edges
        lhs_index = {e.name: i for i, e in enumerate(key.lhs.edges)}
        for r in range(w):
            for re in rule_edges:
                tgt = key.expansion_map[re.name]
                li, off = assign[lhs_index[tgt[1]]]
                bps, sids, _fl = cand[li]
                target_bp = bps[(off + r) % w]
                if tgt[0] == "edge":
                    phi[(str(new_bps[r]), re.name)] = (str(target_bp),)
                else:
                    phi[(str(new_bps[r]), re.name)] = (str(target_bp), tgt[2])
    dom = GraphExpansion(system, list(phi), new_base)
    ran = GraphExpansion(system, list(phi.values()), old_base)
    conj = Rearrangement(dom, phi, ran)
    return Move("type3", out_diag, conj)


# -- reduction of closed diagrams ------------------------------------------------------


def _strand_path_through_bps(d: ClosedDiagram, sid):
    """Follow a strand through base points; returns (#bps crossed, end node, port)."""
    count = 0
    s = d.strands[sid]
    while d.nodes[s.dst[0]] == "bp":
        count += 1
        s = d.strands[d.out_strand(s.dst[0])]
    return count, s.dst[0], s.dst[1]


def _find_chained_type1(d: ClosedDiagram):
    """(split, merge, count): all children reach the same merge through c bps."""
    for snode in d.splits():
        color = d.nodes[snode][1]
        arity = len(d.system.rules[color].graph.edges)
        info = []
        for p in range(arity):
            c, end, port = _strand_path_through_bps(d, d.out_strand(snode, p))
            info.append((c, end, port))
        ends = {x[1] for x in info}
        counts = {x[0] for x in info}
        if len(ends) != 1 or len(counts) != 1:
            continue
        end = ends.pop()
        kind = d.nodes.get(end)
        if not (isinstance(kind, tuple) and kind[0] == "merge" and kind[1] == color):
            continue
        if [x[2] for x in info] != list(range(arity)):
            continue
        yield snode, end, counts.pop()


def _find_chained_type2(d: ClosedDiagram):
    for mnode in d.merges():
        c, end, port = _strand_path_through_bps(d, d.out_strand(mnode))
        kind = d.nodes.get(end)
        if (isinstance(kind, tuple) and kind[0] == "split" and port == 0
                and kind[1] == d.nodes[mnode][1]):
            yield mnode, end, c


def reduce_closed(d: ClosedDiagram, virtual: tuple = (), rng=None, collect=None):
    """The reduced diagram of the similarity class, with logged conjugators.

    ``collect`` (a list) receives the conjugators of the moves performed.
    Raises if clearing shifts get stuck, which reduction-confluence rules out
    for the rule sets this library ships.
    """
    log = collect if collect is not None else []

    def pick(options):
        options = list(options)
        if not options:
            return None
        return rng.choice(options) if rng is not None else options[0]

    while True:
        c1 = pick(_closed_type1(d))
        if c1 is not None:
            d = reduce_type1(d, *c1)
            continue
        c2 = pick(_closed_type2(d))
        if c2 is not None:
            d = reduce_type2(d, *c2)
            continue
        chained = list(_find_chained_type1(d)) + list(_find_chained_type2(d))
        if rng is not None:
            rng.shuffle(chained)
        if chained:
            progressed = False
            for item in chained:
                node_a, node_b, count = item
                attempts = []
                if isinstance(d.nodes[node_a], tuple) and d.nodes[node_a][0] == "split":
                    attempts = [
                        lambda: shift_up_split(d, node_a),
                        lambda: shift_down_merge(d, node_b),
                    ]
                else:
                    attempts = [lambda: shift_up_merge(d, _first_bp_below(d, node_a))]
                for attempt in attempts:
                    try:
                        mv = attempt()
                    except NotAdjacent:
                        continue
                    d = mv.diagram
                    log.append(mv.conj)
                    progressed = True
                    break
                if progressed:
                    break
            if progressed:
                continue
        m = find_type3(d, virtual, rng=rng)
        if m is None:
            mflip = find_type3(d, virtual, allow_flips=True, rng=rng)
            if mflip is not None:
                for bps in sorted(mflip[8]):
                    mv = flip_loop(d, bps)
                    d = mv.diagram
                    log.append(mv.conj)
                m = find_type3(d, virtual)
        if m is not None:
            mv = apply_type3(d, m)
            d = mv.diagram
            log.append(mv.conj)
            continue
        d, log = _minimize_line(d, log)
        return _canonical_flip_orientation(d, log)


def _minimize_line(d: ClosedDiagram, log: list):
    """Park the cut line at a reducing-shift fixpoint (fewest base points)."""
    changed = True
    while changed:
        changed = False
        for snode in sorted(d.splits(), key=repr):
            try:
                mv = shift_up_split(d, snode)
            except NotAdjacent:
                continue
            d = mv.diagram
            log.append(mv.conj)
            changed = True
            break
        if changed:
            continue
        for mnode in sorted(d.merges(), key=repr):
            try:
                mv = shift_down_merge(d, mnode)
            except NotAdjacent:
                continue
            d = mv.diagram
            log.append(mv.conj)
            changed = True
            break
    return d, log


def similarity_canonical_key(d: ClosedDiagram, slack: int = 8,
                             max_states: int = 4000) -> tuple:
    """Least canonical key over the similarity orbit (bounded exploration).

    Two reduced diagrams of the same similarity class get equal keys, so this
    is the schedule-independent canonical form of a reduced class.
    """
    seen = {d.canonical_key()}
    best_bps = len(d.bps())
    frontier = [d]
    explored = 0
    while frontier and explored < max_states:
        cur = frontier.pop(0)
        explored += 1
        best_bps = min(best_bps, len(cur.bps()))
        for spec in all_similarity_moves(cur):
            try:
                mv = apply_shift(cur, spec)
            except NotAdjacent:
                continue
            if len(mv.diagram.bps()) > best_bps + slack:
                continue
            key = mv.diagram.canonical_key()
            if key not in seen:
                seen.add(key)
                frontier.append(mv.diagram)
    return min(seen)


def _canonical_flip_orientation(d: ClosedDiagram, log: list):
    """Orient flippable pure loops so the canonical key is least.

    Reduction schedules can leave undirected loops with either orientation
    (the hidden psi); normalizing makes the reduced form schedule-independent.
    """
    flippable = [tuple(b) for b, ss in pure_loops(d)
                 if _flippable_loop_colors(d.system, d, ss)]
    if not flippable:
        return d, log
    if len(flippable) <= 6:
        import itertools as _it

        best = (d.canonical_key(), (), d)
        for mask in _it.product([False, True], repeat=len(flippable)):
            if not any(mask):
                continue
            cur = d
            moves = []
            for bps, flip in zip(flippable, mask):
                if flip:
                    mv = flip_loop(cur, bps)
                    cur = mv.diagram
                    moves.append(mv.conj)
            key = cur.canonical_key()
            if key < best[0]:
                best = (key, tuple(moves), cur)
        _key, moves, cur = best
        log.extend(moves)
        return cur, log
    # too many loops: greedy, loop by loop
    changed = True
    while changed:
        changed = False
        for bps in flippable:
            try:
                mv = flip_loop(d, bps)
            except NotAdjacent:
                continue
            if mv.diagram.canonical_key() < d.canonical_key():
                d = mv.diagram
                log.append(mv.conj)
                changed = True
    return d, log


def _first_bp_below(d: ClosedDiagram, mnode):
    s = d.strands[d.out_strand(mnode)]
    if d.nodes[s.dst[0]] != "bp":
        raise NotAdjacent("no base point below the merge")
    return s.dst[0]


# -- similarity and the conjugacy algorithm -------------------------------------------


def initial_renaming(system: ReplacementSystem, eta: ClosedDiagram,
                     g: Rearrangement) -> Rearrangement:
    """The base identification between a closure's base graph and g's own base."""
    B = eta.base_graph()
    phi = {}
    for bp, e in zip(eta.bps(), g.domain.base.edges):
        phi[(str(bp),)] = (e.name,)
    return Rearrangement(base_expansion(system, B), phi,
                         base_expansion(system, g.domain.base))


def _bald_key(d: ClosedDiagram) -> tuple:
    """Shift-invariant skeleton: labels dropped, base points contracted.

    The skeleton is canonically labeled (minimum over BFS anchors), so equal
    keys mean the diagrams agree after forgetting the cut line entirely.
    """
    rows_out = []
    for comp in d.components():
        nodes = set()
        for sid in comp:
            s_ = d.strands[sid]
            nodes.add(s_.src[0])
            nodes.add(s_.dst[0])
        real = [n for n in nodes if d.nodes[n] != "bp"]
        if not real:
            loops = [l for l in pure_loops(d) if set(l[1]) <= comp]
            for bps, sids in loops:
                colors = [d.strands[x].color for x in sids]
                best = min(tuple(colors[i:] + colors[:i]) for i in range(len(colors)))
                rows_out.append(("loop", best))
            continue
        edges = []
        for sid in comp:
            s_ = d.strands[sid]
            if d.nodes[s_.src[0]] == "bp":
                continue
            _count, end, port = _strand_path_through_bps(d, sid)
            edges.append((s_.src[0], s_.src[1], end, port, s_.color))
        adj: dict = {}
        for a, pa, b, pb, c in edges:
            adj.setdefault(a, []).append(("o", pa, b, pb, c))
            adj.setdefault(b, []).append(("i", pb, a, pa, c))
        best = None
        for anchor in real:
            ids = {anchor: 0}
            queue = [anchor]
            while queue:
                n = queue.pop(0)
                for role, pp, other, po, c in sorted(adj.get(n, []), key=repr):
                    if other not in ids:
                        ids[other] = len(ids)
                        queue.append(other)
            if len(ids) != len(real):
                continue
            rows = tuple(sorted((ids[a], pa, ids[b], pb, c,
                                 d.nodes[a][0], d.nodes[b][0])
                                for a, pa, b, pb, c in edges))
            kinds = tuple(sorted((ids[n], d.nodes[n][0], d.nodes[n][1]) for n in real))
            key = ("comp", rows, kinds)
            if best is None or key < best:
                best = key
        rows_out.append(best)
    return tuple(sorted(rows_out, key=repr))


def _matching(d1: ClosedDiagram, d2: ClosedDiagram):
    """A node correspondence d1 -> d2 when the diagrams are equal up to renaming."""
    k1, order1 = d1._canonical_traversal()
    k2, order2 = d2._canonical_traversal()
    if k1 != k2 or len(order1) != len(order2):
        return None
    corr = {}
    for (n1, kind1), (n2, kind2) in zip(order1, order2):
        if kind1 != kind2:
            return None
        corr[n1] = n2
    return corr


def _correspondence_element(system, d_from: ClosedDiagram, d_to: ClosedDiagram, corr) -> Rearrangement:
    """P with o(d_from) = P^-1 o(d_to) P given bp correspondence d_from -> d_to."""
    phi = {}
    for bp in d_from.bps():
        phi[(str(bp),)] = (str(corr[bp]),)
    return Rearrangement(base_expansion(system, d_from.base_graph()), phi,
                         base_expansion(system, d_to.base_graph()))


def similarity_search(eta: ClosedDiagram, zeta: ClosedDiagram,
                      max_states: int = 3000, slack: int = 10):
    """Meet-in-the-middle BFS over shifts; None or (corr, L_moves, M_moves).

    Returns the conjugator move lists from eta resp. zeta to a common diagram
    together with the base-point correspondence at the meeting point.
    """
    if _bald_key(eta) != _bald_key(zeta):
        return None
    bound = max(len(eta.bps()), len(zeta.bps())) + slack

    sides = {"L": {}, "M": {}}
    frontier = []

    def add(side, diag, path):
        key = diag.canonical_key()
        if key in sides[side]:
            return None
        sides[side][key] = (diag, path)
        other = "M" if side == "L" else "L"
        if key in sides[other]:
            return key
        frontier.append((side, diag, path))
        return None

    hit = add("L", eta, ())
    hit = hit or add("M", zeta, ())
    explored = 0
    while frontier and explored < max_states and hit is None:
        side, diag, path = frontier.pop(0)
        explored += 1
        for mvspec in all_similarity_moves(diag):
            try:
                mv = apply_shift(diag, mvspec)
            except NotAdjacent:
                continue
            if len(mv.diagram.bps()) > bound:
                continue
            hit = add(side, mv.diagram, path + ((diag, mv),))
            if hit is not None:
                break
    if hit is None:
        return None
    dL, pathL = sides["L"][hit]
    dM, pathM = sides["M"][hit]
    corr = _matching(dM, dL)
    if corr is None:
        return None
    return dL, dM, corr, pathL, pathM


def _path_conjugator(system, start: ClosedDiagram, path, base) -> Rearrangement:
    K = identity(system, base)
    for _diag, mv in path:
        K = compose(K, mv.conj)
    return K


def conjugate(g: Rearrangement, h: Rearrangement, *, rules=None,
              assume_confluent: bool = False, confluence_depth: int = 4,
              max_states: int = 3000) -> Optional[Rearrangement]:
    """Decide conjugacy; return a verified conjugator k with k^-1 g k = h.

    Requires reduction-confluent rules (checked unless ``assume_confluent`` or
    an AugmentedRules value is supplied); raises RulesNotConfluent otherwise.
    """
    system = g.system
    if h.system is not system:
        raise ValueError("elements live over different systems")
    virtual: tuple = ()
    if isinstance(rules, AugmentedRules):
        virtual = rules.virtual
    elif not assume_confluent:
        verdict = check_reduction_confluence(system, confluence_depth)
        if verdict.kind != "confluent":
            raise RulesNotConfluent(
                "rules are not known to be reduction-confluent; pass augmented "
                "rules or assume_confluent=True if confluence is known")
    eta0 = close_element(g)
    zeta0 = close_element(h)
    Kg0 = initial_renaming(system, eta0, g)
    Kh0 = initial_renaming(system, zeta0, h)
    logg: list = []
    logh: list = []
    eta, logg = reduce_closed(eta0, virtual, collect=logg)
    zeta, logh = reduce_closed(zeta0, virtual, collect=logh)
    Kg = Kg0
    for e in logg:
        Kg = _chain(Kg, e)
    Kh = Kh0
    for e in logh:
        Kh = _chain(Kh, e)
    found = similarity_search(eta, zeta, max_states=max_states)
    if found is None:
        return None
    dL, dM, corr, pathL, pathM = found
    L = identity(system, eta.base_graph())
    for _d, mv in pathL:
        L = _chain(L, mv.conj)
    M = identity(system, zeta.base_graph())
    for _d, mv in pathM:
        M = _chain(M, mv.conj)
    P = _correspondence_element(system, dM, dL, corr)
    # o(eta) = Kg^-1 g Kg, o(dL) = L^-1 o(eta) L, o(dM) = M^-1 o(zeta) M and
    # o(dM) = P^-1 o(dL) P together give h = k^-1 g k for the chain below.
    k = compose(Kg, compose(L, compose(P, compose(invert(M), invert(Kh)))))
    if conjugate_by(g, k) == h:
        return k
    k2 = invert(k)
    if conjugate_by(g, k2) == h:
        return k2
    raise AssertionError("similarity found but conjugator verification failed")


def _chain(K: Rearrangement, E: Rearrangement) -> Rearrangement:
    """Extend a logged conjugator chain by one move's element."""
    return compose(K, E)


# -- stable and vanishing symbols ---------------------------------------------------


def stable_vanishing(d: StrandDiagram):
    """Classify symbols of an X-strand diagram by their fate in infinite powers.

    Returns (stable, vanishing, configurations): configurations lists, per
    connected component of the closure, the finitely many relabelings of that
    component's stable symbols produced by cycling the base line once, twice,
    and so on until it returns.
    """
    nu: dict = {}
    for (v1, w1, _), (v2, w2, _) in zip(d.source_labels(), d.sink_labels()):
        nu[v1] = v2
        nu[w1] = w2
    symbols = d.symbols()
    stable = set()
    for x in symbols:
        seen = {x}
        y = x
        while y in nu:
            y = nu[y]
            if y == x:
                stable.add(x)
                break
            if y in seen:
                break
            seen.add(y)
    vanishing = symbols - stable
    closed = close(d)
    configs = []
    for comp in closed.components():
        comp_syms = set()
        for sid in comp:
            s = closed.strands[sid]
            comp_syms.add(s.label[0])
            comp_syms.add(s.label[1])
        comp_stable = sorted(comp_syms & stable)
        orbit = []
        assign = {x: x for x in comp_stable}
        while True:
            orbit.append(dict(assign))
            assign = {x: nu[assign[x]] for x in comp_stable}
            if all(assign[x] == x for x in comp_stable):
                break
            if len(orbit) > len(symbols) + 1:
                break
        configs.append(orbit)
    return stable, vanishing, configs


# -- reduction systems and confluence --------------------------------------------------


@dataclass(frozen=True)
class ConfluenceVerdict:
    kind: str  # "confluent" | "not_confluent" | "inconclusive"
    witness: Optional[ColoredGraph] = None
    witness_forms: tuple = ()
    joined_pairs: int = 0

    @property
    def is_confluent(self):
        return self.kind == "confluent"


def _rule_patterns(system: ReplacementSystem, virtual: tuple = ()):
    pats = []
    for c in system.colors:
        rule = system.rules[c]
        if len(rule.graph.edges) < 2:
            continue
        if rule.kind == "pair":
            interior = [v for v in rule.graph.vertices if v not in (rule.iota, rule.tau)]
            pats.append(("rule", c, rule.graph, (rule.iota, rule.tau), interior))
        else:
            interior = [v for v in rule.graph.vertices if v != rule.iota]
            pats.append(("rule", c, rule.graph, (rule.iota, rule.iota), interior))
    for vr in virtual:
        keep = [e[1] for e in (vr.rhs_src, vr.rhs_dst) if e[0] == "vertex"]
        interior = [v for v in vr.lhs.vertices if v not in keep]
        pats.append(("virtual", vr, vr.lhs, (vr.rhs_src, vr.rhs_dst), interior))
    return pats


def _pattern_matches(host: ColoredGraph, pattern) -> list:
    """Injective edge-matchings of the pattern into the host, with gluing.

    Vertices map injectively except that iota and tau of a rule pattern may
    land on the same host vertex; the dangling condition on interior vertices
    is enforced.
    """
    tag, key, lhs, ends, interior = pattern
    host_by_color: dict = {}
    for e in host.edges:
        host_by_color.setdefault(e.color, []).append(e)
    out = []

    def rec(i, emap, vmap):
        if i == len(lhs.edges):
            # dangling: interior images carry no outside edges
            used = set(emap.values())
            for v in interior:
                hv = vmap[v]
                for he in host.edges:
                    if (he.src == hv or he.dst == hv) and he.name not in used:
                        return
            out.append((dict(emap), dict(vmap)))
            return
        e = lhs.edges[i]
        for he in host_by_color.get(e.color, []):
            if he.name in emap.values():
                continue
            trial = dict(vmap)
            ok = True
            for a, b in ((e.src, he.src), (e.dst, he.dst)):
                if trial.setdefault(a, b) != b:
                    ok = False
                    break
            if not ok:
                continue
            img = list(trial.values())
            # injective except possibly the two boundary vertices
            dup = len(img) - len(set(img))
            if dup > 0:
                if tag != "rule":
                    continue
                iota, tau = ends
                if dup != 1 or trial.get(iota) != trial.get(tau) or iota == tau:
                    continue
            emap[e.name] = he.name
            rec(i + 1, emap, trial)
            del emap[e.name]

    rec(0, {}, {})
    return out


_FRESH = itertools.count()


def _apply_pattern(host: ColoredGraph, pattern, match) -> ColoredGraph:
    tag, key, lhs, ends, interior = pattern
    emap, vmap = match
    used = set(emap.values())
    keep_edges = [e for e in host.edges if e.name not in used]
    drop_verts = {vmap[v] for v in interior}
    if tag == "rule":
        color = key if isinstance(key, str) else key
        src, dst = vmap[ends[0]], vmap[ends[1]]
        new_edge = Edge(f"red{next(_FRESH)}", color, src, dst)
    else:
        vr = key
        def end_vertex(end):
            if end[0] == "vertex":
                return vmap[end[1]]
            return f"fresh{next(_FRESH)}"
        src, dst = end_vertex(vr.rhs_src), end_vertex(vr.rhs_dst)
        new_edge = Edge(f"red{next(_FRESH)}", vr.rhs_color, src, dst)
    verts = [v for v in host.vertices if v not in drop_verts]
    for v in (src, dst):
        if v not in verts:
            verts.append(v)
    g = ColoredGraph(verts, keep_edges + [new_edge])
    return g


def _all_reductions(host: ColoredGraph, patterns) -> list:
    out = []
    for pat in patterns:
        for match in _pattern_matches(host, pat):
            result = _apply_pattern(host, pat, match)
            out.append((pat, match, result))
    return out


def _pinned_encoding(g: ColoredGraph, pinned: set, undirected: frozenset) -> tuple:
    """Canonical encoding with the pinned vertices held fixed.

    Unpinned vertices are canonicalized by brute force (graphs here are tiny);
    edges of undirected colors are normalized to one orientation so reductions
    differing only by the hidden reversing automorphism compare equal.
    """
    free = [v for v in g.vertices if v not in pinned]
    best = None
    for perm in itertools.permutations(free):
        names = {v: ("o", v) for v in g.vertices if v in pinned}
        names.update({v: ("f", i) for i, v in enumerate(perm)})
        rows = []
        for e in g.edges:
            a, b = names[e.src], names[e.dst]
            if e.color in undirected and b < a:
                a, b = b, a
            rows.append((e.color, a, b))
        key = tuple(sorted(rows))
        if best is None or key < best:
            best = key
    return best if best is not None else ()


def _iso_class_key(g: ColoredGraph, undirected: frozenset) -> tuple:
    edges = []
    for e in g.edges:
        s, d = e.src, e.dst
        if e.color in undirected and d < s:
            s, d = d, s
        edges.append(Edge(e.name, e.color, s, d))
    return ColoredGraph(g.vertices, edges).canonical_key()


def check_reduction_confluence(system: ReplacementSystem, depth: int = 4,
                               virtual: tuple = ()) -> ConfluenceVerdict:
    """Critical-pair analysis of the anti-expansion rewriting system.

    Overlapping rule instances are enumerated by gluing two patterns along
    shared edges; each critical host is rewritten both ways and the results
    searched for a strongly-joining common successor (host vertices pinned).
    A host whose exhaustive reduction yields two non-isomorphic reduced forms
    is a genuine non-confluence witness.
    """
    cached = getattr(system, "_confluence_cache", None)
    if cached is not None and cached[0] == (depth, virtual):
        return cached[1]
    undirected = system.validate().undirected_colors
    patterns = _rule_patterns(system, virtual)
    joined = 0
    hosts = _critical_hosts(patterns)
    for host, inst1, inst2 in hosts:
        # the rewriting system's objects are isomorphism classes of colored
        # graphs, with undirected colors compared up to their hidden reversal
        r1 = _apply_pattern(host, inst1[0], inst1[1])
        r2 = _apply_pattern(host, inst2[0], inst2[1])
        if _iso_class_key(r1, undirected) == _iso_class_key(r2, undirected):
            joined += 1
            continue
        k1 = {_iso_class_key(x, undirected) for x in _reachable(r1, patterns, depth)}
        k2 = {_iso_class_key(x, undirected) for x in _reachable(r2, patterns, depth)}
        if k1 & k2:
            joined += 1
            continue
        # distinct reduced forms reachable from the host itself?
        forms = {}
        for x in _reachable(host, patterns, depth + 2):
            if not _all_reductions(x, patterns):
                forms[_iso_class_key(x, undirected)] = x
        if len(forms) > 1:
            verdict = ConfluenceVerdict("not_confluent", witness=host,
                                        witness_forms=tuple(forms.values()),
                                        joined_pairs=joined)
            system._confluence_cache = ((depth, virtual), verdict)
            return verdict
        verdict = ConfluenceVerdict("inconclusive", witness=host, joined_pairs=joined)
        system._confluence_cache = ((depth, virtual), verdict)
        return verdict
    verdict = ConfluenceVerdict("confluent", joined_pairs=joined)
    system._confluence_cache = ((depth, virtual), verdict)
    return verdict


def _reachable(g: ColoredGraph, patterns, depth: int) -> list:
    seen = {g.canonical_key(): g}
    frontier = [(g, 0)]
    while frontier:
        x, d = frontier.pop()
        if d >= depth:
            continue
        for _pat, _match, y in _all_reductions(x, patterns):
            k = y.canonical_key()
            if k not in seen:
                seen[k] = y
                frontier.append((y, d + 1))
    return list(seen.values())


def _critical_hosts(patterns) -> list:
    """Hosts carrying two overlapping instances (sharing at least one edge)."""
    out = []
    seen_hosts = set()
    for i1, p1 in enumerate(patterns):
        for i2, p2 in enumerate(patterns):
            if i2 < i1:
                continue
            lhs1, lhs2 = p1[2], p2[2]
            e1s, e2s = list(lhs1.edges), list(lhs2.edges)
            # partial injective color-preserving maps e1 -> e2
            def overlaps(k):
                for subset in itertools.combinations(range(len(e1s)), k):
                    cands = [
                        [f for f in e2s if f.color == e1s[i].color] for i in subset
                    ]
                    for choice in itertools.product(*cands):
                        if len({f.name for f in choice}) != k:
                            continue
                        yield list(zip(subset, choice))
            for k in range(1, min(len(e1s), len(e2s)) + 1):
                for matching in overlaps(k):
                    if i1 == i2 and all(e1s[a].name == b.name for a, b in matching) \
                            and len(matching) == len(e1s):
                        continue
                    host = _glue(p1, p2, matching)
                    if host is None:
                        continue
                    hostg, m1, m2 = host
                    if m1[0] == m2[0] and i1 == i2:
                        continue
                    hk = (i1, i2, hostg.canonical_key(),
                          tuple(sorted(m1[0].values())), tuple(sorted(m2[0].values())))
                    if hk in seen_hosts:
                        continue
                    seen_hosts.add(hk)
                    # both instances must satisfy dangling in the host
                    if not _instance_valid(hostg, p1, m1) or not _instance_valid(hostg, p2, m2):
                        continue
                    out.append((hostg, (p1, m1), (p2, m2)))
    return out


def _glue(p1, p2, matching):
    """Pushout of the two patterns along the matched edges."""
    tag1, key1, lhs1, ends1, int1 = p1
    tag2, key2, lhs2, ends2, int2 = p2
    parent: dict = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for v in lhs1.vertices:
        find(("1", v))
    for v in lhs2.vertices:
        find(("2", v))
    matched2 = set()
    for i, f in matching:
        e = lhs1.edges[i]
        if e.color != f.color:
            return None
        union(("1", e.src), ("2", f.src))
        union(("1", e.dst), ("2", f.dst))
        matched2.add(f.name)
    # identification within one pattern only allowed for its boundary pair
    def self_ok(tagged, lhs, ends, tag):
        classes: dict = {}
        for v in lhs.vertices:
            classes.setdefault(find((tagged, v)), []).append(v)
        for vs in classes.values():
            if len(vs) > 2:
                return False
            if len(vs) == 2:
                if tag != "rule" or set(vs) != {ends[0], ends[1]}:
                    return False
        return True

    if not self_ok("1", lhs1, ends1, tag1) or not self_ok("2", lhs2, ends2, tag2):
        return None
    vname = {}
    for v in lhs1.vertices:
        vname[("1", v)] = f"h{find(('1', v))}"
    for v in lhs2.vertices:
        vname[("2", v)] = f"h{find(('2', v))}"
    edges = []
    emap1 = {}
    emap2 = {}
    for e in lhs1.edges:
        name = f"a_{e.name}"
        emap1[e.name] = name
        edges.append(Edge(name, e.color, vname[("1", e.src)], vname[("1", e.dst)]))
    match_of = {f.name: lhs1.edges[i].name for i, f in matching}
    for f in lhs2.edges:
        if f.name in matched2:
            emap2[f.name] = emap1[match_of[f.name]]
        else:
            name = f"b_{f.name}"
            emap2[f.name] = name
            edges.append(Edge(name, f.color, vname[("2", f.src)], vname[("2", f.dst)]))
    verts = []
    for e in edges:
        for v in (e.src, e.dst):
            if v not in verts:
                verts.append(v)
    host = ColoredGraph(verts, edges)
    vmap1 = {v: vname[("1", v)] for v in lhs1.vertices}
    vmap2 = {v: vname[("2", v)] for v in lhs2.vertices}
    return host, (emap1, vmap1), (emap2, vmap2)


def _instance_valid(host: ColoredGraph, pattern, match) -> bool:
    tag, key, lhs, ends, interior = pattern
    emap, vmap = match
    used = set(emap.values())
    for v in interior:
        hv = vmap[v]
        for he in host.edges:
            if (he.src == hv or he.dst == hv) and he.name not in used:
                return False
    # the vertex map must be injective except a rule's iota/tau gluing
    img = list(vmap.values())
    dup = len(img) - len(set(img))
    if dup == 0:
        return True
    if tag != "rule" or dup > 1:
        return False
    iota, tau = ends
    return vmap[iota] == vmap[tau] and iota != tau


def closed_to_dot(d: ClosedDiagram, name: str = "C") -> str:
    """DOT for a closed diagram: base points drawn on a dashed cut line."""
    from .graphs import dot_color_map

    cm = dot_color_map({s.color for s in d.strands.values()})
    lines = [f'digraph "{name}" {{']
    bps = d.bps()
    for nid, kind in d.nodes.items():
        tag = str(nid)
        if kind == "bp":
            lines.append(f'  "{tag}" [shape=square, style=dashed, label="{tag}"];')
        elif kind[0] == "split":
            lines.append(f'  "{tag}" [shape=invtriangle, label=""];')
        else:
            lines.append(f'  "{tag}" [shape=triangle, label=""];')
    if len(bps) > 1:
        chain = " -> ".join(f'"{b}"' for b in bps)
        lines.append(f"  {{ rank=same; {'; '.join(chr(34) + str(b) + chr(34) for b in bps)} }}")
        lines.append(f"  {chain} [style=dashed, arrowhead=none, constraint=false];")
    for sid, st in d.strands.items():
        v, w, z = st.label
        lines.append(
            f'  "{st.src[0]}" -> "{st.dst[0]}" [label="({v},{w},{z})", color={cm[st.color]}];'
        )
    lines.append("}")
    return "\n".join(lines)
