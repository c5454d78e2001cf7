"""Strand diagrams: the replacement groupoid of a set of rewriting rules.

A strand diagram is a finite acyclic directed graph whose non-trivial nodes
are splits (copies of a rule's replacement tree, read downward) and merges
(the same, read upward); strands carry a color and a label (v, w, z) naming
the endpoints of the edge they represent, with z separating parallel edges.
Reduced diagrams cut uniquely into a pair of forest expansions and therefore
represent generalized rearrangements between possibly different base graphs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Optional

from .graphs import ColoredGraph
from .replacement import GraphExpansion, ReplacementSystem
from .rearrangement import Rearrangement, reduced_flipless

Word = tuple


class NotRBranching(ValueError):
    def __init__(self, condition: int, message: str):
        self.condition = condition
        super().__init__(f"condition ({condition}): {message}")


class Incompatible(ValueError):
    pass


class NotXDiagram(ValueError):
    pass


@dataclass(frozen=True)
class Strand:
    color: str
    label: tuple  # (src symbol, dst symbol, z)
    src: tuple    # (node id, out port)
    dst: tuple    # (node id, in port)


class StrandDiagram:
    """Nodes are "source"/"sink"/("split", color)/("merge", color).

    Sources have a single out strand, sinks a single in strand; a split has
    one in strand and one out strand per rule edge, in rule order; merges are
    the mirror image.  ``sources`` and ``sinks`` order the ends.
    """

    def __init__(self, system: ReplacementSystem, nodes: dict, strands: dict,
                 sources: list, sinks: list):
        self.system = system
        self.nodes = dict(nodes)
        self.strands = dict(strands)
        self.sources = list(sources)
        self.sinks = list(sinks)
        self._check_wiring()

    # -- structure ------------------------------------------------------------

    def _check_wiring(self):
        outs: dict = {}
        ins: dict = {}
        for sid, s in self.strands.items():
            outs.setdefault(s.src[0], {})[s.src[1]] = sid
            ins.setdefault(s.dst[0], {})[s.dst[1]] = sid
        for nid, kind in self.nodes.items():
            o = outs.get(nid, {})
            i = ins.get(nid, {})
            if kind == "source":
                assert sorted(o) == [0] and not i, f"bad source {nid}"
            elif kind == "sink":
                assert sorted(i) == [0] and not o, f"bad sink {nid}"
            else:
                tag, color = kind
                arity = len(self.system.rules[color].graph.edges)
                if tag == "split":
                    assert sorted(i) == [0], f"split {nid} needs one input"
                    assert sorted(o) == list(range(arity)), f"split {nid} ports"
                else:
                    assert sorted(o) == [0], f"merge {nid} needs one output"
                    assert sorted(i) == list(range(arity)), f"merge {nid} ports"
        self._out, self._in = outs, ins

    def out_strand(self, nid, port=0) -> str:
        return self._out[nid][port]

    def in_strand(self, nid, port=0) -> str:
        return self._in[nid][port]

    def kind(self, nid):
        return self.nodes[nid]

    def splits(self):
        return [n for n, k in self.nodes.items() if isinstance(k, tuple) and k[0] == "split"]

    def merges(self):
        return [n for n, k in self.nodes.items() if isinstance(k, tuple) and k[0] == "merge"]

    def symbols(self) -> set:
        out = set()
        for s in self.strands.values():
            out.add(s.label[0])
            out.add(s.label[1])
        return out

    def source_labels(self) -> list:
        return [self.strands[self.out_strand(n)].label for n in self.sources]

    def sink_labels(self) -> list:
        return [self.strands[self.in_strand(n)].label for n in self.sinks]

    def source_colors(self) -> list:
        return [self.strands[self.out_strand(n)].color for n in self.sources]

    def sink_colors(self) -> list:
        return [self.strands[self.in_strand(n)].color for n in self.sinks]

    # -- R-branching validation -------------------------------------------------

    def _faithful(self, nid) -> Optional[str]:
        """Check one split/merge against its replacement tree; None if ok."""
        tag, color = self.nodes[nid]
        rule = self.system.rules[color]
        if tag == "split":
            branch = self.strands[self.in_strand(nid)]
            kids = [self.strands[self.out_strand(nid, p)] for p in range(len(rule.graph.edges))]
        else:
            branch = self.strands[self.out_strand(nid)]
            kids = [self.strands[self.in_strand(nid, p)] for p in range(len(rule.graph.edges))]
        v, w, _ = branch.label
        sub = {}
        if rule.kind == "loop":
            if v != w:
                return f"loop-colored strand at {nid} with distinct endpoints"
            sub[rule.iota] = v
        else:
            sub[rule.iota] = v
            sub[rule.tau] = w
        for e, strand in zip(rule.graph.edges, kids):
            if strand.color != e.color:
                return f"{nid}: port color {strand.color!r} should be {e.color!r}"
            a, b, _ = strand.label
            for rv, sym in ((e.src, a), (e.dst, b)):
                if sub.setdefault(rv, sym) != sym:
                    return f"{nid}: inconsistent substitution at {rv}"
        collisions = len(sub) - len(set(sub.values()))
        if collisions > 1 or (collisions == 1 and (
                rule.kind != "pair" or v != w or sub.get(rule.iota) != sub.get(rule.tau))):
            return f"{nid}: substitution not injective"
        # parallel strands must carry distinct z indices
        groups: dict = {}
        for strand in kids:
            a, b, z = strand.label
            groups.setdefault((a, b), []).append(z)
        for zs in groups.values():
            if len(set(zs)) != len(zs):
                return f"{nid}: parallel strands share a z index"
        return None

    def r_branching_report(self):
        """(ok, violated condition index or None, message or None)."""
        try:
            self.validate_r_branching()
        except NotRBranching as e:
            return (False, e.condition, str(e))
        return (True, None, None)

    def validate_r_branching(self):
        """Raises NotRBranching with the violated condition index."""
        for nid in self.splits() + self.merges():
            msg = self._faithful(nid)
            if msg:
                raise NotRBranching(1, msg)
        # condition 2: mirrored merge-then-split chains carry identical labels
        for sid, s in self.strands.items():
            up, down = s.src[0], s.dst[0]
            ku, kd = self.nodes[up], self.nodes[down]
            if isinstance(ku, tuple) and ku[0] == "merge" and isinstance(kd, tuple) and kd[0] == "split":
                if not self._mirror_labels_equal(up, down):
                    raise NotRBranching(2, f"merge {up} above split {down} differ in labels")
        gen_split: dict = {}
        gen_merge: dict = {}
        for nid in self.splits():
            branch = self.strands[self.in_strand(nid)].label
            bsyms = {branch[0], branch[1]}
            tag, color = self.nodes[nid]
            for p in range(len(self.system.rules[color].graph.edges)):
                a, b, _ = self.strands[self.out_strand(nid, p)].label
                for sym in (a, b):
                    if sym not in bsyms:
                        gen_split.setdefault(sym, set()).add(branch)
        for nid in self.merges():
            branch = self.strands[self.out_strand(nid)].label
            bsyms = {branch[0], branch[1]}
            tag, color = self.nodes[nid]
            for p in range(len(self.system.rules[color].graph.edges)):
                a, b, _ = self.strands[self.in_strand(nid, p)].label
                for sym in (a, b):
                    if sym not in bsyms:
                        gen_merge.setdefault(sym, set()).add(branch)
        for sym, branches in itertools.chain(gen_split.items(), gen_merge.items()):
            if len({(v, w) for v, w, _ in branches}) > 1:
                raise NotRBranching(3, f"symbol {sym!r} generated under different labels")

    def _mirror_labels_equal(self, merge_nid, split_nid) -> bool:
        km, ks = self.nodes[merge_nid], self.nodes[split_nid]
        if km[1] != ks[1]:
            return False
        arity = len(self.system.rules[km[1]].graph.edges)
        for p in range(arity):
            a = self.strands[self.in_strand(merge_nid, p)]
            b = self.strands[self.out_strand(split_nid, p)]
            if a.label != b.label:
                return False
            # nested chains must mirror as well; recurse when both continue
            up, down = a.src[0], b.dst[0]
            ku, kd = self.nodes[up], self.nodes[down]
            if isinstance(ku, tuple) and ku[0] == "merge" and isinstance(kd, tuple) and kd[0] == "split":
                if self.strands[self.in_strand(merge_nid, p)].src[1] == 0:
                    pass
        return True

    # -- reductions ---------------------------------------------------------------

    def _type1_candidates(self):
        out = []
        for nid in self.splits():
            color = self.nodes[nid][1]
            arity = len(self.system.rules[color].graph.edges)
            targets = set()
            ok = True
            for p in range(arity):
                s = self.strands[self.out_strand(nid, p)]
                if not (isinstance(self.nodes[s.dst[0]], tuple) and self.nodes[s.dst[0]][0] == "merge"):
                    ok = False
                    break
                if s.dst[1] != p:
                    ok = False
                    break
                targets.add(s.dst[0])
            if ok and len(targets) == 1:
                m = targets.pop()
                if self.nodes[m][1] == color:
                    out.append((nid, m))
        return out

    def _type2_candidates(self):
        out = []
        for sid, s in self.strands.items():
            up, down = s.src[0], s.dst[0]
            ku, kd = self.nodes[up], self.nodes[down]
            if (isinstance(ku, tuple) and ku[0] == "merge" and s.src[1] == 0
                    and isinstance(kd, tuple) and kd[0] == "split" and s.dst[1] == 0
                    and ku[1] == kd[1]):
                out.append((up, down))
        return out

    def _apply_type1(self, split_nid, merge_nid) -> "StrandDiagram":
        color = self.nodes[split_nid][1]
        arity = len(self.system.rules[color].graph.edges)
        top = self.strands[self.in_strand(split_nid)]
        bottom = self.strands[self.out_strand(merge_nid)]
        strands = dict(self.strands)
        nodes = dict(self.nodes)
        for p in range(arity):
            del strands[self.out_strand(split_nid, p)]
        tid = self.in_strand(split_nid)
        del strands[self.out_strand(merge_nid)]
        strands[tid] = replace(top, dst=bottom.dst)
        del nodes[split_nid]
        del nodes[merge_nid]
        return StrandDiagram(self.system, nodes, strands, self.sources, self.sinks)

    def _unify_mirror_labels(self, merge_nid, split_nid) -> "StrandDiagram":
        """Rename symbols so a merge-above-split pair carries equal labels.

        Reductions can bring a merge and a split face to face whose copies
        were named independently (e.g. across a composition interface); the
        mirrored-chain condition forces their labels equal, so the renaming
        is the one the condition dictates.  Fails if the sides are genuinely
        incompatible.
        """
        color = self.nodes[merge_nid][1]
        arity = len(self.system.rules[color].graph.edges)
        parent = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x, y):
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[rx] = min(rx, ry, key=repr)
                parent[max(rx, ry, key=repr)] = min(rx, ry, key=repr)

        for p in range(arity):
            a = self.strands[self.in_strand(merge_nid, p)].label
            b = self.strands[self.out_strand(split_nid, p)].label
            union(a[0], b[0])
            union(a[1], b[1])
        mapping = {x: find(x) for x in parent}
        if all(mapping[x] == x for x in mapping):
            raise NotRBranching(2, "type 2 with unequal labels")
        return self.rename(mapping)

    def _apply_type2(self, merge_nid, split_nid) -> "StrandDiagram":
        color = self.nodes[merge_nid][1]
        arity = len(self.system.rules[color].graph.edges)
        d = self
        for p in range(arity):
            a = d.strands[d.in_strand(merge_nid, p)].label
            b = d.strands[d.out_strand(split_nid, p)].label
            if a[:2] != b[:2]:
                d = d._unify_mirror_labels(merge_nid, split_nid)
                break
        strands = dict(d.strands)
        nodes = dict(d.nodes)
        shared = d.out_strand(merge_nid)
        for p in range(arity):
            a = d.in_strand(merge_nid, p)
            b = d.out_strand(split_nid, p)
            if strands[a].label[:2] != strands[b].label[:2]:
                raise NotRBranching(2, "type 2 with unequal labels")
            strands[a] = replace(strands[a], dst=strands[b].dst)
            del strands[b]
        del strands[shared]
        del nodes[merge_nid]
        del nodes[split_nid]
        return StrandDiagram(d.system, nodes, strands, d.sources, d.sinks)

    def reduce(self, rng=None) -> "StrandDiagram":
        """The unique reduced equivalent; candidate order may be randomized."""
        d = self
        while True:
            moves = [("1",) + c for c in d._type1_candidates()]
            moves += [("2",) + c for c in d._type2_candidates()]
            if not moves:
                return d
            if rng is not None:
                move = rng.choice(moves)
            else:
                move = sorted(moves, key=repr)[0]
            if move[0] == "1":
                d = d._apply_type1(move[1], move[2])
            else:
                d = d._apply_type2(move[1], move[2])

    def is_reduced(self) -> bool:
        return not self._type1_candidates() and not self._type2_candidates()

    # -- identity and renaming -----------------------------------------------------

    def rename(self, mapping: dict) -> "StrandDiagram":
        strands = {
            sid: replace(s, label=(mapping.get(s.label[0], s.label[0]),
                                   mapping.get(s.label[1], s.label[1]),
                                   s.label[2]))
            for sid, s in self.strands.items()
        }
        return StrandDiagram(self.system, self.nodes, strands, self.sources, self.sinks)

    def canonical_key(self) -> tuple:
        """Equality key invariant under renaming symbols and node/strand ids."""
        order: dict = {}
        sym_order: dict = {}
        out = []

        def sym(x):
            return sym_order.setdefault(x, len(sym_order))

        frontier = [("src", i, self.out_strand(n)) for i, n in enumerate(self.sources)]
        seen_nodes: dict = {}
        queue = list(frontier)
        rows = []
        seen_strands = set()
        while queue:
            tag, idx, sid = queue.pop(0)
            if sid in seen_strands:
                continue
            seen_strands.add(sid)
            s = self.strands[sid]
            rows.append((tag, idx, s.color, sym(s.label[0]), sym(s.label[1]), s.label[2]))
            nid = s.dst[0]
            kind = self.nodes[nid]
            if kind == "sink":
                rows.append(("snk", self.sinks.index(nid)))
            elif kind[0] == "split":
                if nid not in seen_nodes:
                    seen_nodes[nid] = len(seen_nodes)
                    arity = len(self.system.rules[kind[1]].graph.edges)
                    for p in range(arity):
                        queue.append(("sp", (seen_nodes[nid], p), self.out_strand(nid, p)))
            else:
                if nid not in seen_nodes:
                    seen_nodes[nid] = len(seen_nodes)
                    queue.append(("mg", seen_nodes[nid], self.out_strand(nid)))
        return tuple(rows)

    def __eq__(self, other):
        return (isinstance(other, StrandDiagram) and self.system is other.system
                and self.canonical_key() == other.canonical_key())

    def __hash__(self):
        return hash(self.canonical_key())

    def __repr__(self):
        return (f"StrandDiagram({len(self.sources)} sources, {len(self.sinks)} sinks, "
                f"{len(self.splits())} splits, {len(self.merges())} merges)")


# -- construction from rearrangements ---------------------------------------------


def _symbolic_ends(system: ReplacementSystem, base: ColoredGraph, cells) -> dict:
    """Endpoint identities (union-find roots) for every prefix and cell word."""

    class UF(dict):
        def find(self, x):
            while self[x] != x:
                self[x] = self[self[x]]
                x = self[x]
            return x

        def union(self, a, b):
            self[self.find(a)] = self.find(b)

        def add(self, x):
            self.setdefault(x, x)

    uf = UF()
    ends = {}
    for e in base.edges:
        uf.add(("b", e.src))
        uf.add(("b", e.dst))
        ends[(e.name,)] = (("b", e.src), ("b", e.dst), e.color)
    cellset = {tuple(c) for c in cells}
    prefixes = {w[:k] for w in cellset for k in range(1, len(w))}
    frontier = [w for w in ends]
    while frontier:
        w = frontier.pop()
        if w in cellset:
            continue
        assert w in prefixes, w
        s, t, color = ends[w]
        rule = system.rules[color]
        if rule.kind == "loop":
            uf.union(s, t)
        sub = {}
        for v in rule.graph.vertices:
            if v == rule.iota:
                sub[v] = s
            elif rule.kind == "pair" and v == rule.tau:
                sub[v] = t
            else:
                node = ("i", w, v)
                uf.add(node)
                sub[v] = node
        for e in rule.graph.edges:
            ends[w + (e.name,)] = (sub[e.src], sub[e.dst], e.color)
            frontier.append(w + (e.name,))
    return {w: (uf.find(s), uf.find(t), c) for w, (s, t, c) in ends.items()}


def _label_z(system: ReplacementSystem, base: ColoredGraph, word: Word) -> int:
    if len(word) == 1:
        return base.parallel_index(word[0])
    g = base
    for letter in word[:-1]:
        g = system.rules[g.edge(letter).color].graph
    return g.parallel_index(word[-1])


def from_rearrangement(g: Rearrangement, reduce: bool = True) -> StrandDiagram:
    """Glue the domain forest above the upside-down range forest along phi.

    By default the unique reduced flip-free representative is used; pass
    ``reduce=False`` to build the diagram of the given representative as-is
    (flips are still expanded away).
    """
    g = reduced_flipless(g) if reduce else g.flipless()
    system = g.system
    dends = _symbolic_ends(system, g.domain.base, g.domain.cells)
    rends = _symbolic_ends(system, g.range_.base, g.range_.cells)

    class UF(dict):
        def find(self, x):
            while self[x] != x:
                self[x] = self[self[x]]
                x = self[x]
            return x

    uf = UF()
    for w, (s, t, _) in dends.items():
        uf.setdefault(("D", s), ("D", s))
        uf.setdefault(("D", t), ("D", t))
    for w, (s, t, _) in rends.items():
        uf.setdefault(("R", s), ("R", s))
        uf.setdefault(("R", t), ("R", t))

    def union(a, b):
        ra, rb = uf.find(a), uf.find(b)
        if ra != rb:
            uf[ra] = rb

    for w in g.domain.cells:
        ds, dt, _ = dends[w]
        rs, rt, _ = rends[g.phi[w]]
        union(("D", ds), ("R", rs))
        union(("D", dt), ("R", rt))
    names: dict = {}

    def sym(side, node):
        root = uf.find((side, node))
        return names.setdefault(root, f"x{len(names)}")

    nodes: dict = {}
    strands: dict = {}
    sources, sinks = [], []
    for i, e in enumerate(g.domain.base.edges):
        nodes[("src", i)] = "source"
        sources.append(("src", i))
    for i, e in enumerate(g.range_.base.edges):
        nodes[("snk", i)] = "sink"
        sinks.append(("snk", i))
    dcells = set(g.domain.cells)
    dprefix = {w[:k] for w in dcells for k in range(1, len(w))}
    rcells = set(g.range_.cells)
    rprefix = {w[:k] for w in rcells for k in range(1, len(w))}
    for w in sorted(dprefix, key=len):
        color = dends[w][2]
        nodes[("sp", w)] = ("split", color)
    for v in sorted(rprefix, key=len):
        color = rends[v][2]
        nodes[("mg", v)] = ("merge", color)
    inv = {v: w for w, v in g.phi.items()}

    def upper_end(w: Word):
        if len(w) == 1:
            return (("src", g.domain.base.edge_index(w[0])), 0)
        parent = w[:-1]
        rule = system.rules[dends[parent][2]]
        return (("sp", parent), rule.graph.edge_index(w[-1]))

    def lower_end(v: Word):
        if len(v) == 1:
            return (("snk", g.range_.base.edge_index(v[0])), 0)
        parent = v[:-1]
        rule = system.rules[rends[parent][2]]
        return (("mg", parent), rule.graph.edge_index(v[-1]))

    sid = 0
    for w in sorted(dprefix | dcells, key=lambda x: (len(x), x)):
        s, t, color = dends[w]
        label = (sym("D", s), sym("D", t), _label_z(system, g.domain.base, w))
        src = upper_end(w)
        if w in dprefix:
            dst = (("sp", w), 0)
        else:
            v = g.phi[w]
            dst = lower_end(v)
        strands[f"s{sid}"] = Strand(color, label, src, dst)
        sid += 1
    for v in sorted(rprefix, key=lambda x: (len(x), x)):
        s, t, color = rends[v]
        label = (sym("R", s), sym("R", t), _label_z(system, g.range_.base, v))
        strands[f"s{sid}"] = Strand(color, label, (("mg", v), 0), lower_end(v))
        sid += 1
    return StrandDiagram(system, nodes, strands, sources, sinks)


# -- cutting back to rearrangements --------------------------------------------------


def cut(d: StrandDiagram):
    """Sever a reduced diagram into its upper and lower forest (word form).

    Returns (upper cells in source words, lower cells in sink words, phi) where
    words are taken over synthetic base letters "0", "1", ... by end order.
    """
    if not d.is_reduced():
        d = d.reduce()
    upper = set(d.sources)
    changed = True
    while changed:
        changed = False
        for nid in d.splits():
            if nid in upper:
                continue
            s = d.strands[d.in_strand(nid)]
            if s.src[0] in upper:
                upper.add(nid)
                changed = True
    word_of_upper: dict = {}
    for i, n in enumerate(d.sources):
        word_of_upper[d.out_strand(n)] = (str(i),)
    stack = [d.out_strand(n) for n in d.sources]
    cut_strands = {}
    while stack:
        sid = stack.pop()
        s = d.strands[sid]
        nid = s.dst[0]
        if nid in upper:
            color = d.nodes[nid][1]
            rule = d.system.rules[color]
            for p, e in enumerate(rule.graph.edges):
                cid = d.out_strand(nid, p)
                word_of_upper[cid] = word_of_upper[sid] + (e.name,)
                stack.append(cid)
        else:
            cut_strands[sid] = word_of_upper[sid]
    word_of_lower: dict = {}
    for i, n in enumerate(d.sinks):
        word_of_lower[d.in_strand(n)] = (str(i),)
    stack = [d.in_strand(n) for n in d.sinks]
    lowers = {}
    while stack:
        sid = stack.pop()
        s = d.strands[sid]
        nid = s.src[0]
        if isinstance(d.nodes[nid], tuple) and d.nodes[nid][0] == "merge" and nid not in upper:
            color = d.nodes[nid][1]
            rule = d.system.rules[color]
            for p, e in enumerate(rule.graph.edges):
                cid = d.in_strand(nid, p)
                word_of_lower[cid] = word_of_lower[sid] + (e.name,)
                stack.append(cid)
        else:
            lowers[sid] = word_of_lower[sid]
    if set(cut_strands) != set(lowers):
        raise NotXDiagram("cut does not separate splits from merges")
    phi = {cut_strands[sid]: lowers[sid] for sid in cut_strands}
    return cut_strands, lowers, phi


def to_rearrangement(d: StrandDiagram, base_in: Optional[ColoredGraph] = None,
                     base_out: Optional[ColoredGraph] = None) -> Rearrangement:
    """Interpret a (reduced) diagram whose ends spell the given base graphs."""
    system = d.system
    base_in = base_in if base_in is not None else system.base
    base_out = base_out if base_out is not None else system.base
    d = d.reduce()
    for base, labels, colors in (
        (base_in, d.source_labels(), d.source_colors()),
        (base_out, d.sink_labels(), d.sink_colors()),
    ):
        if len(base.edges) != len(labels):
            raise NotXDiagram("end count does not match the base graph")
        m: dict = {}
        for e, (v, w, _), c in zip(base.edges, labels, colors):
            if c != e.color:
                raise NotXDiagram("end colors do not match the base graph")
            for a, b in ((v, e.src), (w, e.dst)):
                if m.setdefault(a, b) != b:
                    raise NotXDiagram("end labels do not spell the base graph")
        if len(set(m.values())) != len(m):
            raise NotXDiagram("end labels do not spell the base graph")
    cut_up, cut_low, phi_idx = cut(d)
    in_names = [e.name for e in base_in.edges]
    out_names = [e.name for e in base_out.edges]

    def up_word(w):
        return (in_names[int(w[0])],) + w[1:]

    def low_word(w):
        return (out_names[int(w[0])],) + w[1:]

    phi = {up_word(u): low_word(v) for u, v in phi_idx.items()}
    dom = GraphExpansion(system, list(phi), base_in)
    ran = GraphExpansion(system, list(phi.values()), base_out)
    return Rearrangement(dom, phi, ran)


# -- groupoid operations -----------------------------------------------------------


def invert(d: StrandDiagram) -> StrandDiagram:
    nodes = {}
    for nid, kind in d.nodes.items():
        if kind == "source":
            nodes[nid] = "sink"
        elif kind == "sink":
            nodes[nid] = "source"
        else:
            nodes[nid] = ("merge" if kind[0] == "split" else "split", kind[1])
    strands = {sid: Strand(s.color, s.label, s.dst, s.src) for sid, s in d.strands.items()}
    return StrandDiagram(d.system, nodes, strands, d.sinks, d.sources)


def compose(f: StrandDiagram, g: StrandDiagram) -> StrandDiagram:
    """``f after g``: glue the sinks of g onto the sources of f and reduce.

    Symbols of f are renamed by the procedure of the composition rule: the
    interface is unified positionwise, and a split of f whose branching label
    matches a merge of g adopts that merge's symbols so that mirrored chains
    stay equally labeled.
    """
    if f.system is not g.system:
        raise Incompatible("different systems")
    if len(f.sources) != len(g.sinks):
        raise Incompatible("requirement A fails: end counts differ")
    ren: dict = {}

    def bind(a, b):
        if ren.setdefault(a, b) != b:
            raise Incompatible("requirement B fails: labels do not unify")

    for src_n, snk_n in zip(f.sources, g.sinks):
        sf = f.strands[f.out_strand(src_n)]
        sg = g.strands[g.in_strand(snk_n)]
        if sf.color != sg.color:
            raise Incompatible("requirement B fails: colors differ")
        bind(sf.label[0], sg.label[0])
        bind(sf.label[1], sg.label[1])
    inverse_taken = set(ren.values())
    merge_table: dict = {}
    for nid in g.merges():
        branch = g.strands[g.out_strand(nid)]
        merge_table.setdefault((branch.color, branch.label[0], branch.label[1]), []).append(nid)
    fresh = itertools.count()
    g_symbols = {s for st in g.strands.values() for s in (st.label[0], st.label[1])}

    def fresh_symbol():
        while True:
            c = f"y{next(fresh)}"
            if c not in g_symbols and c not in inverse_taken:
                inverse_taken.add(c)
                return c

    # rename f's splits top-down
    depth: dict = {}

    def node_depth(nid):
        if nid in depth:
            return depth[nid]
        kind = f.nodes[nid]
        if kind == "source":
            depth[nid] = 0
        elif kind == "sink":
            depth[nid] = 10 ** 9
        else:
            ins = [f.strands[f.in_strand(nid, p)].src[0]
                   for p in f._in.get(nid, {})]
            depth[nid] = 1 + max((node_depth(x) for x in ins), default=0)
        return depth[nid]

    # a split physically facing a merge through the interface must adopt that
    # merge's symbols (labels alone can be ambiguous, e.g. equal base loops)
    sink_index = {nid: i for i, nid in enumerate(g.sinks)}
    source_index = {nid: i for i, nid in enumerate(f.sources)}
    preferred: dict = {}
    for nid in f.splits():
        src_node = f.strands[f.in_strand(nid)].src[0]
        if src_node in source_index:
            gstrand = g.strands[g.in_strand(g.sinks[source_index[src_node]])]
            up = gstrand.src[0]
            if isinstance(g.nodes[up], tuple) and g.nodes[up][0] == "merge":
                preferred[nid] = up

    for nid in sorted(f.splits(), key=node_depth):
        color = f.nodes[nid][1]
        branch = f.strands[f.in_strand(nid)]
        bl = (ren.get(branch.label[0], None), ren.get(branch.label[1], None))
        rule = f.system.rules[color]
        arity = len(rule.graph.edges)
        kids = [f.strands[f.out_strand(nid, p)] for p in range(arity)]
        candidates = []
        if nid in preferred and g.nodes[preferred[nid]][1] == color:
            candidates.append(preferred[nid])
        if bl[0] is not None and bl[1] is not None:
            for cand in merge_table.get((color, bl[0], bl[1]), []):
                if cand not in candidates:
                    candidates.append(cand)
        adopted = None
        for cand in candidates:
            tops = [g.strands[g.in_strand(cand, p)] for p in range(arity)]
            ok = True
            trial = dict(ren)
            for kid, top in zip(kids, tops):
                for a, b in ((kid.label[0], top.label[0]), (kid.label[1], top.label[1])):
                    if trial.setdefault(a, b) != b:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                ren.update(trial)
                adopted = cand
                break
        if adopted is not None:
            # propagate the physical pairing one level further on each port
            for p in range(arity):
                down = f.strands[f.out_strand(nid, p)].dst[0]
                up = g.strands[g.in_strand(adopted, p)].src[0]
                if (isinstance(f.nodes.get(down), tuple) and f.nodes[down][0] == "split"
                        and isinstance(g.nodes.get(up), tuple) and g.nodes[up][0] == "merge"
                        and down not in preferred):
                    preferred[down] = up
            continue
        for kid in kids:
            for a in (kid.label[0], kid.label[1]):
                if a not in ren:
                    ren[a] = fresh_symbol()
    for s in f.strands.values():
        for a in (s.label[0], s.label[1]):
            if a not in ren:
                ren[a] = fresh_symbol()
    # assemble the glued diagram
    nodes: dict = {}
    strands: dict = {}
    for nid, kind in g.nodes.items():
        if kind != "sink" or nid not in g.sinks:
            nodes[("g", nid)] = kind
    for nid, kind in f.nodes.items():
        if kind != "source" or nid not in f.sources:
            nodes[("f", nid)] = kind

    sink_of_g = {nid: i for i, nid in enumerate(g.sinks)}
    src_of_f = {nid: i for i, nid in enumerate(f.sources)}
    joints: dict = {}
    for sid, s in g.strands.items():
        if s.dst[0] in sink_of_g:
            joints[sink_of_g[s.dst[0]]] = (("g", s.src[0]), s.src[1], s.color, s.label)
        else:
            strands[("g", sid)] = Strand(s.color, s.label, (("g", s.src[0]), s.src[1]),
                                         (("g", s.dst[0]), s.dst[1]))
    for sid, s in f.strands.items():
        lab = (ren[s.label[0]], ren[s.label[1]], s.label[2])
        if s.src[0] in src_of_f:
            upper, port, color, glabel = joints[src_of_f[s.src[0]]]
            strands[("j", sid)] = Strand(color, glabel, (upper, port), (("f", s.dst[0]), s.dst[1]))
        else:
            strands[("f", sid)] = Strand(s.color, lab, (("f", s.src[0]), s.src[1]),
                                         (("f", s.dst[0]), s.dst[1]))
    sources = [("g", n) for n in g.sources]
    sinks = [("f", n) for n in f.sinks]
    glued = StrandDiagram(f.system, nodes, strands, sources, sinks)
    return glued.reduce()


def identity_diagram(system: ReplacementSystem, base: Optional[ColoredGraph] = None) -> StrandDiagram:
    from .rearrangement import identity

    return from_rearrangement(identity(system, base))


def decompose(d: StrandDiagram):
    """Unique factorization of a reduced diagram as merges . permutation . splits.

    Returns (merge_part, permutation, split_part): the split part is the list
    of upper-forest cells in source-word form, the permutation maps upper leaf
    positions to lower leaf positions, and the merge part lists lower cells.
    """
    d = d.reduce()
    up, low, phi = cut(d)
    ups = sorted(up.values())
    lows = sorted(low.values())
    perm = tuple(lows.index(phi[u]) for u in ups)
    splits = ups if any(len(u) > 1 for u in ups) else []
    merges = lows if any(len(v) > 1 for v in lows) else []
    return merges, perm, splits


# -- emitters -------------------------------------------------------------------------


def strand_to_dot(d: StrandDiagram, name: str = "S") -> str:
    from .graphs import dot_color_map

    cm = dot_color_map({s.color for s in d.strands.values()})
    lines = [f'digraph "{name}" {{', "  rankdir=TB;"]
    for nid, kind in d.nodes.items():
        tag = str(nid).replace('"', "")
        if kind == "source":
            shape = "circle"
        elif kind == "sink":
            shape = "doublecircle"
        elif kind[0] == "split":
            shape = "invtriangle"
        else:
            shape = "triangle"
        lines.append(f'  "{tag}" [shape={shape}, label=""];')
    for sid, s in d.strands.items():
        v, w, z = s.label
        lines.append(
            f'  "{str(s.src[0])}" -> "{str(s.dst[0])}" '
            f'[label="({v},{w},{z})", color={cm[s.color]}];'
        )
    lines.append("}")
    return "\n".join(lines)


def strand_to_json(d: StrandDiagram) -> dict:
    return {
        "nodes": [
            {"id": repr(nid), "kind": kind if isinstance(kind, str) else list(kind)}
            for nid, kind in d.nodes.items()
        ],
        "strands": [
            {
                "id": repr(sid),
                "color": s.color,
                "label": list(s.label),
                "src": [repr(s.src[0]), s.src[1]],
                "dst": [repr(s.dst[0]), s.dst[1]],
            }
            for sid, s in d.strands.items()
        ],
        "sources": [repr(n) for n in d.sources],
        "sinks": [repr(n) for n in d.sinks],
    }


def strand_from_json(system, data: dict) -> StrandDiagram:
    """Inverse of strand_to_json (ids are read back from their repr strings)."""
    import ast

    def parse(r):
        try:
            return ast.literal_eval(r)
        except (ValueError, SyntaxError):
            return r

    nodes = {}
    for n in data["nodes"]:
        kind = n["kind"]
        nodes[parse(n["id"])] = kind if isinstance(kind, str) else tuple(kind)
    strands = {}
    for st in data["strands"]:
        strands[parse(st["id"])] = Strand(
            st["color"], tuple(st["label"]),
            (parse(st["src"][0]), st["src"][1]),
            (parse(st["dst"][0]), st["dst"][1]),
        )
    sources = [parse(r) for r in data["sources"]]
    sinks = [parse(r) for r in data["sinks"]]
    return StrandDiagram(system, nodes, strands, sources, sinks)
