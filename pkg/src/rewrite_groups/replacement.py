"""Edge replacement systems, graph expansions, cells and cellular partitions.

A system is a colored base graph plus one replacement graph per color.
Rewriting replaces an edge by the replacement graph of its color, gluing the
boundary vertices onto the endpoints of the replaced edge.  Cells of the
limit space are handled symbolically as the words that address them: a word
is a walk on the color graph starting at the base state, and a graph
expansion is the antichain of words at the leaves of a complete subforest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .graphs import ColoredGraph, Edge

Word = tuple  # tuple[str, ...]; first letter from the base graph


class MalformedSystem(ValueError):
    pass


class NotACell(ValueError):
    pass


class NotReducible(ValueError):
    pass


class NotRepairable(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    """Replacement graph of one color with its boundary marking.

    ``boundary`` is ("pair", iota, tau) for ordinary colors or ("loop", lam)
    for loop-normalized colors whose edges are all loops.
    """

    graph: ColoredGraph
    boundary: tuple

    @property
    def kind(self) -> str:
        return self.boundary[0]

    @property
    def iota(self) -> str:
        if self.boundary[0] == "pair":
            return self.boundary[1]
        return self.boundary[1]

    @property
    def tau(self) -> str:
        if self.boundary[0] == "pair":
            return self.boundary[2]
        return self.boundary[1]

    def boundary_vertices(self) -> tuple:
        return (self.iota,) if self.kind == "loop" else (self.iota, self.tau)


@dataclass(frozen=True)
class ValidationReport:
    expanding: bool
    loop_uniform: bool
    undirected_colors: frozenset
    null_expanding_isolated_colors: frozenset
    finite_branching_sufficient: bool


class ReplacementSystem:
    def __init__(self, colors: Sequence[str], base: ColoredGraph, rules: dict,
                 letter_origin: Optional[dict] = None):
        self.colors = tuple(colors)
        self.base = base
        self.rules: dict[str, Rule] = dict(rules)
        # for systems produced by normalize_loops: (context, new letter) -> old letter
        self.letter_origin = letter_origin
        used = set(base.colors())
        for c, rule in self.rules.items():
            used |= rule.graph.colors()
        if used - set(self.colors):
            raise MalformedSystem(f"colors without declaration: {sorted(used - set(self.colors))}")
        for c in self.colors:
            if c not in self.rules:
                raise MalformedSystem(f"color {c!r} has no replacement rule")
            rule = self.rules[c]
            for v in rule.boundary_vertices():
                if v not in rule.graph.vertices:
                    raise MalformedSystem(f"boundary vertex {v!r} missing in rule {c!r}")
            if rule.kind == "pair" and rule.iota == rule.tau:
                raise MalformedSystem(f"rule {c!r}: initial and terminal vertices coincide")
        self._report: Optional[ValidationReport] = None

    # -- graphs and letters --------------------------------------------------

    def graph_of(self, context: Optional[str]) -> ColoredGraph:
        """The graph whose edges may follow ``context`` (None = base graph)."""
        return self.base if context is None else self.rules[context].graph

    def letter_color(self, context: Optional[str], letter: str) -> str:
        return self.graph_of(context).edge(letter).color

    def word_colors(self, word: Word) -> list:
        """Color of each letter; raises KeyError for words outside the language."""
        out = []
        ctx = None
        for letter in word:
            c = self.letter_color(ctx, letter)
            out.append(c)
            ctx = c
        return out

    def word_color(self, word: Word) -> str:
        return self.word_colors(word)[-1]

    def language_contains(self, word: Iterable) -> bool:
        word = tuple(word)
        if not word:
            return False
        ctx = None
        for letter in word:
            g = self.graph_of(ctx)
            try:
                ctx = g.edge(letter).color
            except KeyError:
                return False
        return True

    def children(self, word: Word) -> list:
        c = self.word_color(word)
        return [word + (e.name,) for e in self.rules[c].graph.edges]

    def color_graph(self) -> ColoredGraph:
        """The automaton A_R: state q(c) per color plus the base state q(0)."""
        verts = ["q(0)"] + [f"q({c})" for c in self.colors]
        edges = []
        for ctx, tag in [(None, "q(0)")] + [(c, f"q({c})") for c in self.colors]:
            g = self.graph_of(ctx)
            for e in g.edges:
                name = e.name if ctx is None else f"{ctx}:{e.name}"
                edges.append(Edge(name, "walk", tag, f"q({e.color})"))
        keep = {v for v in verts if any(e.src == v or e.dst == v for e in edges)}
        return ColoredGraph([v for v in verts if v in keep], edges)

    # -- validation -----------------------------------------------------------

    def validate(self) -> ValidationReport:
        if self._report is None:
            self._report = self._validate()
        return self._report

    def _rule_expanding(self, rule: Rule) -> bool:
        g = rule.graph
        if rule.kind == "pair":
            if len(g.vertices) < 3 or len(g.edges) < 2:
                return False
            for e in g.edges:
                if {e.src, e.dst} == {rule.iota, rule.tau}:
                    return False
            return True
        # loop rules are images of pair rules with iota and tau identified
        if len(g.vertices) < 2 or len(g.edges) < 2:
            return False
        return not any(e.is_loop and e.src == rule.iota for e in g.edges)

    def _null_expanding(self, color: str) -> bool:
        """q(color) lies on an inescapable cycle of the color graph.

        Equivalently the walk from q(color) is forced (out-degree one all the
        way) and returns to q(color).
        """
        succ = {c: [e.color for e in self.rules[c].graph.edges] for c in self.colors}
        seen = set()
        c = color
        while True:
            if len(succ[c]) != 1:
                return False
            c = succ[c][0]
            if c == color:
                return True
            if c in seen:
                return False
            seen.add(c)

    def _isolated_colors(self) -> frozenset:
        """Largest color set whose edges stay vertex-disjoint in all expansions."""

        def locally_disjoint(c: str) -> bool:
            for ctx in [None] + list(self.colors):
                g = self.graph_of(ctx)
                for e in g.edges:
                    if e.color != c:
                        continue
                    for f in g.edges:
                        if f.name == e.name:
                            continue
                        if {e.src, e.dst} & {f.src, f.dst}:
                            return False
            return True

        iso = {c for c in self.colors if locally_disjoint(c)}
        changed = True
        while changed:
            changed = False
            for c in list(iso):
                ok = True
                for ctx in self.colors:
                    rule = self.rules[ctx]
                    for e in rule.graph.edges:
                        if e.color == c and ({e.src, e.dst} & set(rule.boundary_vertices())):
                            if ctx not in iso:
                                ok = False
                if not ok:
                    iso.discard(c)
                    changed = True
        return frozenset(iso)

    def undirected_colors(self) -> frozenset:
        from .graphs import isomorphisms

        out = set()
        for c, rule in self.rules.items():
            if rule.kind != "pair":
                continue
            pin = {rule.iota: rule.tau, rule.tau: rule.iota}
            if isomorphisms(rule.graph, rule.graph, pinned=pin, limit=1):
                out.add(c)
        return frozenset(out)

    def reversing_automorphism(self, color: str):
        """The fixed orientation-reversing automorphism psi of an undirected color.

        Deterministically the least one; None if the color is not undirected.
        """
        from .graphs import isomorphisms

        rule = self.rules[color]
        if rule.kind != "pair":
            return None
        pin = {rule.iota: rule.tau, rule.tau: rule.iota}
        isos = isomorphisms(rule.graph, rule.graph, pinned=pin)
        return isos[0] if isos else None

    def _loop_uniform(self) -> bool:
        status: dict = {}
        for ctx in [None] + list(self.colors):
            g = self.graph_of(ctx)
            for e in g.edges:
                status.setdefault(e.color, set()).add(e.is_loop)
        for c, kinds in status.items():
            if len(kinds) > 1:
                return False
            looped = kinds == {True}
            if looped != (self.rules[c].kind == "loop"):
                return False
        return True

    def _finite_branching_sufficient(self) -> bool:
        for rule in self.rules.values():
            if rule.kind == "pair":
                if rule.graph.degree(rule.iota) > 1 or rule.graph.degree(rule.tau) > 1:
                    return False
            else:
                if rule.graph.degree(rule.iota) > 2:
                    return False
        return True

    def _validate(self) -> ValidationReport:
        isolated = self._isolated_colors()
        nei = frozenset(c for c in isolated if self._null_expanding(c))
        expanding = all(self._rule_expanding(r) for r in self.rules.values())
        return ValidationReport(
            expanding=expanding,
            loop_uniform=self._loop_uniform(),
            undirected_colors=self.undirected_colors(),
            null_expanding_isolated_colors=nei,
            finite_branching_sufficient=self._finite_branching_sufficient(),
        )

    def __repr__(self):
        return f"ReplacementSystem(colors={list(self.colors)})"


# -- loop normalization ------------------------------------------------------


def normalize_loops(system: ReplacementSystem) -> ReplacementSystem:
    """Split every color whose edges mix loops and non-loops.

    Loop edges of a split color c get a new color c~ whose rule is the old one
    with iota and tau identified to a single vertex.  The produced system has
    ``letter_origin`` filled so words can be translated back and forth.
    """
    if system._loop_uniform():
        return system

    status: dict = {}
    for ctx in [None] + list(system.colors):
        for e in system.graph_of(ctx).edges:
            status.setdefault(e.color, set()).add(e.is_loop)

    def needs_split(c):
        return status.get(c) == {True, False}

    def loop_only(c):
        return status.get(c) == {True}

    loop_name = {}
    taken = set(system.colors)
    for c in system.colors:
        if needs_split(c):
            lc = f"{c}~"
            while lc in taken:
                lc += "~"
            taken.add(lc)
            loop_name[c] = lc
        else:
            loop_name[c] = c

    def recolor(color: str, is_loop: bool) -> str:
        return loop_name[color] if is_loop else color

    new_colors: list = []
    new_rules: dict = {}
    origin: dict = {}

    def convert_graph(g: ColoredGraph, ctx_key) -> ColoredGraph:
        edges = []
        for e in g.edges:
            origin[(ctx_key, e.name)] = e.name
            edges.append(Edge(e.name, recolor(e.color, e.is_loop), e.src, e.dst))
        return ColoredGraph(g.vertices, edges)

    def loop_rule_from_pair(rule: Rule, lc: str, fresh: bool) -> Rule:
        g = rule.graph
        lam = rule.iota
        vmap = {v: (lam if v == rule.tau else v) for v in g.vertices}
        verts = [v for v in g.vertices if v != rule.tau]
        edges = []
        for e in g.edges:
            name = f"{lc}.{e.name}" if fresh else e.name
            origin[(lc, name)] = e.name
            s, d = vmap[e.src], vmap[e.dst]
            edges.append(Edge(name, recolor(e.color, s == d), s, d))
        return Rule(ColoredGraph(verts, edges), ("loop", lam))

    for c in system.colors:
        rule = system.rules[c]
        occ = status.get(c, set())
        if rule.kind == "loop" and occ - {True}:
            raise MalformedSystem(f"loop-boundary color {c!r} colors non-loop edges")
        if needs_split(c):
            new_colors.append(c)
            new_rules[c] = Rule(convert_graph(rule.graph, c), rule.boundary)
            lc = loop_name[c]
            new_colors.append(lc)
            new_rules[lc] = loop_rule_from_pair(rule, lc, fresh=True)
        elif loop_only(c) and rule.kind == "pair":
            new_colors.append(c)
            new_rules[c] = loop_rule_from_pair(rule, c, fresh=False)
        else:
            new_colors.append(c)
            new_rules[c] = Rule(convert_graph(rule.graph, c), rule.boundary)

    base = ColoredGraph(
        system.base.vertices,
        [Edge(e.name, recolor(e.color, e.is_loop), e.src, e.dst) for e in system.base.edges],
    )
    for e in system.base.edges:
        origin[(None, e.name)] = e.name
    return ReplacementSystem(new_colors, base, new_rules, letter_origin=origin)


def translate_word(normalized: ReplacementSystem, original: ReplacementSystem, word: Word) -> Word:
    """Lift a word of the original system into the loop-normalized system."""
    if normalized.letter_origin is None:
        return tuple(word)
    out = []
    ctx = None
    for letter in word:
        g = normalized.graph_of(ctx)
        hit = None
        for e in g.edges:
            if normalized.letter_origin.get((ctx, e.name), e.name) == letter:
                hit = e
                break
        if hit is None:
            raise KeyError(f"letter {letter!r} has no image in context {ctx!r}")
        out.append(hit.name)
        ctx = hit.color
    return tuple(out)


# -- expanding repair ----------------------------------------------------------


def _gadget_graph(color: str) -> ColoredGraph:
    """The five-edge replacement graph with trivial rearrangement group."""
    verts = ["l", "t1", "t2", "b", "r"]
    edges = [
        Edge("n1", color, "l", "t1"),
        Edge("n2", color, "t1", "t2"),
        Edge("n3", color, "t2", "r"),
        Edge("n4", color, "l", "b"),
        Edge("n5", color, "b", "r"),
    ]
    return ColoredGraph(verts, edges)


def make_expanding(system: ReplacementSystem) -> tuple:
    """Replace null-expanding isolated colors by the rigid five-edge gadget.

    Returns the repaired system together with the map of rewired colors.
    """
    report = system.validate()
    bad = [c for c in system.colors if not system._rule_expanding(system.rules[c])]
    if not bad:
        return system, {}
    rewired = {}
    rules = dict(system.rules)
    for c in bad:
        if c not in report.null_expanding_isolated_colors:
            raise NotRepairable(f"color {c!r} is not a null-expanding isolated color")
        old = system.rules[c]
        # the rule of a null-expanding isolated color is a single edge; keep its color
        target = old.graph.edges[0].color
        g = _gadget_graph(target)
        rules[c] = Rule(g, ("pair", "l", "r"))
        rewired[c] = target
    out = ReplacementSystem(system.colors, system.base, rules)
    if not out.validate().expanding:
        raise NotRepairable("repair did not produce an expanding system")
    return out, rewired


# -- rational sequences --------------------------------------------------------


def _primitive(period: tuple) -> tuple:
    n = len(period)
    for d in range(1, n + 1):
        if n % d == 0 and period == period[:d] * (n // d):
            return period[:d]
    return period


@dataclass(frozen=True)
class RationalSequence:
    """An eventually periodic sequence prefix . period^omega, normalized."""

    prefix: tuple
    period: tuple

    @staticmethod
    def make(prefix: Iterable, period: Iterable) -> "RationalSequence":
        prefix = tuple(prefix)
        period = _primitive(tuple(period))
        if not period:
            raise ValueError("empty period")
        while prefix and prefix[-1] == period[-1]:
            prefix = prefix[:-1]
            period = (period[-1],) + period[:-1]
        return RationalSequence(prefix, period)

    def letter(self, i: int) -> str:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.period[(i - len(self.prefix)) % len(self.period)]

    def prefix_of_length(self, n: int) -> tuple:
        return tuple(self.letter(i) for i in range(n))

    def __str__(self):
        return " ".join(self.prefix) + (" " if self.prefix else "") + "(" + " ".join(self.period) + ")"


def sequence_in_language(system: ReplacementSystem, s: RationalSequence) -> bool:
    n = len(s.prefix) + 2 * len(s.period)
    return system.language_contains(s.prefix_of_length(max(n, 1)))


# -- graph expansions ----------------------------------------------------------


def word_sort_key(system: ReplacementSystem, base: ColoredGraph, word: Word) -> tuple:
    """Depth-first order of the leaves of the corresponding forest."""
    key = []
    g = base
    for letter in word:
        key.append(g.edge_index(letter))
        g = system.rules[g.edge(letter).color].graph
    return tuple(key)


class _UnionFind(dict):
    def find(self, x):
        while self[x] != x:
            self[x] = self[self[x]]
            x = self[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self[ra] = rb

    def add(self, x):
        if x not in self:
            self[x] = x


class GraphExpansion:
    """An antichain of words covering the whole symbol space, plus its leaf graph.

    ``base`` may differ from the system's base graph: generalized expansions
    over other base graphs are what the replacement groupoid acts on.
    """

    def __init__(self, system: ReplacementSystem, cells: Iterable[Word],
                 base: Optional[ColoredGraph] = None):
        self.system = system
        self.base = base if base is not None else system.base
        cells = [tuple(c) for c in cells]
        self.cells = tuple(sorted(cells, key=lambda w: word_sort_key(system, self.base, w)))
        self._check_antichain()
        self.leaf_graph = self._compute_leaf_graph()

    # -- structure ---------------------------------------------------------

    def _check_antichain(self):
        cellset = set(self.cells)
        if len(cellset) != len(self.cells):
            raise NotACell("duplicate cells")
        for w in self.cells:
            if not w:
                raise NotACell("empty word is not a cell")
            for k in range(1, len(w)):
                if w[:k] in cellset:
                    raise NotACell(f"{w} extends the cell {w[:k]}")
        # completeness: repeatedly replace full sibling families by parents
        words = set(self.cells)
        changed = True
        while changed:
            changed = False
            parents = {}
            for w in words:
                if len(w) > 1:
                    parents.setdefault(w[:-1], set()).add(w)
            for p, kids in parents.items():
                color = self._color_of(p)
                rule_edges = {e.name for e in self.system.rules[color].graph.edges}
                if {w[-1] for w in kids} == rule_edges:
                    words -= kids
                    words.add(p)
                    changed = True
                    break
        if words != {(e.name,) for e in self.base.edges}:
            raise NotACell("cells do not form a complete partition")

    def _color_of(self, word: Word) -> str:
        g = self.base
        color = None
        for letter in word:
            color = g.edge(letter).color
            g = self.system.rules[color].graph
        assert color is not None
        return color

    def cell_color(self, word: Word) -> str:
        return self._color_of(word)

    def _compute_leaf_graph(self) -> ColoredGraph:
        # expand breadth-first from the base, tracking endpoints by union-find
        uf = _UnionFind()
        ends: dict = {}
        for e in self.base.edges:
            s, t = ("b", e.src), ("b", e.dst)
            uf.add(s), uf.add(t)
            ends[(e.name,)] = (s, t, e.color)
        frontier = list(ends)
        cellset = set(self.cells)
        prefixes = {w[:k] for w in self.cells for k in range(1, len(w))}
        while frontier:
            w = frontier.pop()
            if w in cellset:
                continue
            if w not in prefixes:
                raise NotACell(f"{w} is neither a cell nor a prefix of one")
            s, t, color = ends[w]
            rule = self.system.rules[color]
            if rule.kind == "loop":
                uf.union(s, t)
            sub = {}
            for v in rule.graph.vertices:
                if rule.kind == "pair" and v == rule.iota:
                    sub[v] = s
                elif rule.kind == "pair" and v == rule.tau:
                    sub[v] = t
                elif rule.kind == "loop" and v == rule.iota:
                    sub[v] = s
                else:
                    node = ("i", w, v)
                    uf.add(node)
                    sub[v] = node
            for e in rule.graph.edges:
                ends[w + (e.name,)] = (sub[e.src], sub[e.dst], e.color)
                frontier.append(w + (e.name,))
        # canonical vertex names: least incident (word, endpoint marker)
        reps: dict = {}
        for w in self.cells:
            s, t, _ = ends[w]
            for node, mark in ((s, "s"), (t, "t")):
                key = (word_sort_key(self.system, self.base, w), mark)
                root = uf.find(node)
                if root not in reps or key < reps[root][0]:
                    reps[root] = (key, f"{' '.join(w)}/{mark}")
        verts = []
        edges = []
        for w in self.cells:
            s, t, color = ends[w]
            sv, tv = reps[uf.find(s)][1], reps[uf.find(t)][1]
            for v in (sv, tv):
                if v not in verts:
                    verts.append(v)
            edges.append(Edge(" ".join(w), color, sv, tv))
        return ColoredGraph(verts, edges)

    def cell_edge(self, word: Word) -> Edge:
        return self.leaf_graph.edge(" ".join(word))

    def cell_is_loop(self, word: Word) -> bool:
        return self.cell_edge(word).is_loop

    def cell_type(self, word: Word) -> tuple:
        return (self.cell_color(word), self.cell_is_loop(word))

    # -- rewriting -----------------------------------------------------------

    def expand(self, word: Word) -> "GraphExpansion":
        word = tuple(word)
        if word not in set(self.cells):
            raise NotACell(f"{word} is not a cell of this expansion")
        color = self._color_of(word)
        kids = [word + (e.name,) for e in self.system.rules[color].graph.edges]
        cells = [c for c in self.cells if c != word] + kids
        return GraphExpansion(self.system, cells, self.base)

    def reduce(self, family: Iterable[Word]) -> "GraphExpansion":
        family = {tuple(w) for w in family}
        if not family or any(len(w) < 2 for w in family):
            raise NotReducible("family must consist of words of length >= 2")
        parents = {w[:-1] for w in family}
        if len(parents) != 1:
            raise NotReducible("family members are not siblings")
        parent = parents.pop()
        color = self._color_of(parent)
        rule_edges = {e.name for e in self.system.rules[color].graph.edges}
        if {w[-1] for w in family} != rule_edges:
            raise NotReducible("family is not the full set of children")
        if not family <= set(self.cells):
            raise NotReducible("family members are not all cells")
        # interior vertices of the pattern must carry no extra incidences
        boundary = set()
        rule = self.system.rules[color]
        for w in family:
            e = self.cell_edge(w)
            rule_edge = rule.graph.edge(w[-1])
            for v, rv in ((e.src, rule_edge.src), (e.dst, rule_edge.dst)):
                if rv not in rule.boundary_vertices():
                    deg = self.leaf_graph.degree(v)
                    expected = rule.graph.degree(rv)
                    if deg != expected:
                        raise NotReducible(f"vertex {v} has outside incidences")
        cells = [c for c in self.cells if c not in family] + [parent]
        return GraphExpansion(self.system, cells, self.base)

    def reducible_families(self) -> list:
        out = []
        parents = {}
        for w in self.cells:
            if len(w) > 1:
                parents.setdefault(w[:-1], []).append(w)
        for p, kids in sorted(parents.items()):
            color = self._color_of(p)
            rule_edges = {e.name for e in self.system.rules[color].graph.edges}
            if {w[-1] for w in kids} == rule_edges:
                try:
                    self.reduce(kids)
                except NotReducible:
                    continue
                out.append(tuple(sorted(kids)))
        return out

    # -- value semantics -------------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, GraphExpansion)
            and self.system is other.system
            and self.base == other.base
            and self.cells == other.cells
        )

    def __hash__(self):
        return hash((id(self.system), self.base.encoding(), self.cells))

    def __repr__(self):
        return f"GraphExpansion({[' '.join(w) for w in self.cells]})"


def base_expansion(system: ReplacementSystem, base: Optional[ColoredGraph] = None) -> GraphExpansion:
    b = base if base is not None else system.base
    return GraphExpansion(system, [(e.name,) for e in b.edges], b)


def full_expansion(system: ReplacementSystem, depth: int) -> GraphExpansion:
    """E_depth: every edge expanded at every step; cells have length depth+1."""
    exp = base_expansion(system)
    for _ in range(depth):
        for w in list(exp.cells):
            exp = exp.expand(w)
    return exp


def minimal_refinement(e1: GraphExpansion, e2: GraphExpansion) -> GraphExpansion:
    if e1.system is not e2.system or e1.base != e2.base:
        raise ValueError("expansions live over different systems or bases")
    a, b = set(e1.cells), set(e2.cells)
    cells = set()
    for w in a:
        if any(w[: len(v)] == v for v in b if len(v) <= len(w)):
            cells.add(w)
    for w in b:
        if any(w[: len(v)] == v for v in a if len(v) < len(w)):
            cells.add(w)
    return GraphExpansion(e1.system, cells, e1.base)


def expansion_containing(system: ReplacementSystem, words: Iterable[Word],
                         base: Optional[ColoredGraph] = None) -> GraphExpansion:
    """The coarsest expansion in which every given word is a union of cells."""
    exp = base_expansion(system, base)
    todo = sorted({tuple(w) for w in words}, key=len)
    for w in todo:
        for k in range(1, len(w)):
            if w[:k] in set(exp.cells):
                exp = exp.expand(w[:k])
    return exp


def system_to_json(system: ReplacementSystem) -> dict:
    from .graphs import graph_to_json

    report = system.validate()
    rules = {}
    for c in system.colors:
        rule = system.rules[c]
        entry = graph_to_json(rule.graph)
        if rule.kind == "pair":
            entry["boundary"] = {"kind": "pair", "iota": rule.iota, "tau": rule.tau}
        else:
            entry["boundary"] = {"kind": "loop", "lambda": rule.iota}
        rules[c] = entry
    return {
        "colors": [
            {
                "name": c,
                "boundary": system.rules[c].kind,
                "undirected": c in report.undirected_colors,
            }
            for c in system.colors
        ],
        "base": graph_to_json(system.base),
        "rules": rules,
    }


def system_from_json(data: dict) -> ReplacementSystem:
    from .graphs import graph_from_json

    colors = [c["name"] for c in data["colors"]]
    base = graph_from_json(data["base"])
    rules = {}
    for c in colors:
        entry = data["rules"][c]
        g = graph_from_json(entry)
        b = entry["boundary"]
        if b["kind"] == "pair":
            rules[c] = Rule(g, ("pair", b["iota"], b["tau"]))
        else:
            rules[c] = Rule(g, ("loop", b["lambda"]))
    return ReplacementSystem(colors, base, rules)
