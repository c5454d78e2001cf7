"""Group elements as graph pair diagrams: reduction, composition, action.

A rearrangement is stored as a pair of graph expansions with a cell bijection
that is an isomorphism of the leaf graphs.  Orientation reversal of a cell of
an undirected color is recorded in a flip set; a flipped pair abbreviates its
one-level expansion through the fixed orientation-reversing automorphism psi
of that color.  Reduction to the unique reduced diagram gives the canonical
representative used for equality and hashing.

The same diagrams, taken over base graphs other than the system's own,
form the replacement groupoid; composition below is implemented at that
generality so the strand-diagram machinery can reuse it.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .graphs import ColoredGraph
from .replacement import (
    GraphExpansion,
    RationalSequence,
    ReplacementSystem,
    base_expansion,
    minimal_refinement,
)

Word = tuple


class SystemMismatch(ValueError):
    pass


class NotAnIsomorphism(ValueError):
    pass


class TypeMismatch(ValueError):
    pass


class BadFlip(ValueError):
    pass


def _parse_cell(name: str) -> Word:
    return tuple(name.split(" "))


class Rearrangement:
    """A (generalized) rearrangement: reduced graph pair diagram.

    Construction validates the diagram and stores the reduced form.  Elements
    with ``domain.base == range_.base == system.base`` are group elements;
    others are groupoid elements used internally by the conjugacy machinery.
    """

    def __init__(self, domain: GraphExpansion, phi: dict, range_: GraphExpansion,
                 flips: Iterable[Word] = (), _reduced: bool = False):
        if domain.system is not range_.system:
            raise SystemMismatch("domain and range use different systems")
        self.system: ReplacementSystem = domain.system
        self.domain = domain
        self.range_ = range_
        self.phi = {tuple(k): tuple(v) for k, v in phi.items()}
        self.flips = frozenset(tuple(w) for w in flips)
        self._validate()
        if not _reduced:
            d = _reduce(self)
            self.domain, self.range_, self.phi, self.flips = d

    # -- validation ---------------------------------------------------------

    def _validate(self):
        dcells, rcells = set(self.domain.cells), set(self.range_.cells)
        if set(self.phi) != dcells or set(self.phi.values()) != rcells or len(self.phi) != len(dcells):
            raise NotAnIsomorphism("phi is not a bijection between the cell sets")
        undirected = self.system.validate().undirected_colors
        vmap: dict = {}

        def bind(a, b):
            if vmap.get(a, b) != b:
                raise NotAnIsomorphism(f"inconsistent vertex image for {a}")
            vmap[a] = b

        for w, v in self.phi.items():
            if self.domain.cell_type(w) != self.range_.cell_type(v):
                raise TypeMismatch(f"cells {w} and {v} have different types")
            ed, er = self.domain.cell_edge(w), self.range_.cell_edge(v)
            if w in self.flips:
                if ed.color not in undirected:
                    raise BadFlip(f"flip on directed color {ed.color!r}")
                bind(ed.src, er.dst)
                bind(ed.dst, er.src)
            else:
                bind(ed.src, er.src)
                bind(ed.dst, er.dst)
        if len(set(vmap.values())) != len(vmap):
            raise NotAnIsomorphism("vertex map is not injective")

    # -- basic properties ---------------------------------------------------

    @property
    def is_group_element(self) -> bool:
        return self.domain.base == self.range_.base == self.system.base

    def encoding(self) -> tuple:
        return (
            self.domain.base.encoding(),
            self.range_.base.encoding(),
            tuple(sorted((w, self.phi[w], w in self.flips) for w in self.phi)),
        )

    def __eq__(self, other):
        return (
            isinstance(other, Rearrangement)
            and self.system is other.system
            and self.encoding() == other.encoding()
        )

    def __hash__(self):
        return hash(self.encoding())

    def __repr__(self):
        pairs = ", ".join(
            f"{' '.join(w)}->{' '.join(self.phi[w])}{'~' if w in self.flips else ''}"
            for w in self.domain.cells
        )
        return f"Rearrangement({pairs})"

    def is_identity(self) -> bool:
        return (
            self.domain.base == self.range_.base
            and all(self.phi[w] == w for w in self.phi)
            and not self.flips
        )

    # -- structural operations ------------------------------------------------

    def psi(self, color: str):
        iso = self.system.reversing_automorphism(color)
        assert iso is not None, f"no reversing automorphism for color {color!r}"
        return iso

    def expand_at(self, w: Word) -> "Rearrangement":
        """The one-level expansion of the diagram at a domain cell."""
        w = tuple(w)
        v = self.phi[w]
        color = self.domain.cell_color(w)
        rule = self.system.rules[color]
        phi = dict(self.phi)
        flips = set(self.flips)
        del phi[w]
        flipped = w in flips
        flips.discard(w)
        if flipped:
            psi = self.psi(color).edge_map
            for e in rule.graph.edges:
                phi[w + (e.name,)] = v + (psi[e.name],)
        else:
            for e in rule.graph.edges:
                phi[w + (e.name,)] = v + (e.name,)
        return Rearrangement(self.domain.expand(w), phi, self.range_.expand(v), flips,
                             _reduced=True)

    def flipless(self) -> "Rearrangement":
        """Equivalent diagram with every flip expanded away."""
        out = self
        while out.flips:
            out = out.expand_at(next(iter(sorted(out.flips))))
        return out

    def expand_domain_to(self, cells: Iterable[Word]) -> "Rearrangement":
        target = {tuple(c) for c in cells}
        out = self
        changed = True
        while changed:
            changed = False
            for w in out.domain.cells:
                if w not in target and any(t[: len(w)] == w for t in target if len(t) > len(w)):
                    out = out.expand_at(w)
                    changed = True
                    break
        return out

    def expand_range_to(self, cells: Iterable[Word]) -> "Rearrangement":
        target = {tuple(c) for c in cells}
        inv = {v: w for w, v in self.phi.items()}
        out = self
        changed = True
        while changed:
            changed = False
            inv = {v: w for w, v in out.phi.items()}
            for v in out.range_.cells:
                if v not in target and any(t[: len(v)] == v for t in target if len(t) > len(v)):
                    out = out.expand_at(inv[v])
                    changed = True
                    break
        return out

    # -- action on words and sequences ---------------------------------------

    def domain_cell_covering(self, word: Word) -> Word:
        word = tuple(word)
        for w in self.domain.cells:
            if word[: len(w)] == w:
                return w
        raise ValueError(f"{word} does not extend a domain cell")

    def apply_word(self, word: Word) -> Word:
        word = tuple(word)
        w = self.domain_cell_covering(word)
        v = self.phi[w]
        rest = word[len(w):]
        if w in self.flips and rest:
            psi = self.psi(self.domain.cell_color(w)).edge_map
            rest = (psi[rest[0]],) + rest[1:]
        return v + rest

    def apply_rational(self, s: RationalSequence) -> RationalSequence:
        maxlen = max(len(w) for w in self.domain.cells)
        d = None
        for k in range(1, maxlen + 1):
            if s.prefix_of_length(k) in set(self.domain.cells):
                d = s.prefix_of_length(k)
                break
        assert d is not None, "domain cells do not cover the sequence"
        k = len(d)
        v = self.phi[d]
        head = list(v)
        if d in self.flips:
            psi = self.psi(self.domain.cell_color(d)).edge_map
            head.append(psi[s.letter(k)])
            k += 1
        # tail of s from position k onward
        if k < len(s.prefix):
            return RationalSequence.make(tuple(head) + s.prefix[k:], s.period)
        j = (k - len(s.prefix)) % len(s.period)
        period = s.period[j:] + s.period[:j]
        return RationalSequence.make(tuple(head), period)

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "domain": [list(w) for w in self.domain.cells],
            "range": [list(self.phi[w]) for w in self.domain.cells],
            "phi": [
                [list(w), list(self.phi[w])] + ([True] if w in self.flips else [])
                for w in self.domain.cells
            ],
        }


def rearrangement_from_json(system: ReplacementSystem, data: dict) -> Rearrangement:
    phi = {}
    flips = []
    for entry in data["phi"]:
        w, v = tuple(entry[0]), tuple(entry[1])
        phi[w] = v
        if len(entry) > 2 and entry[2]:
            flips.append(w)
    domain = GraphExpansion(system, list(phi))
    range_ = GraphExpansion(system, list(phi.values()))
    return Rearrangement(domain, phi, range_, flips)


# -- reduction -----------------------------------------------------------------


def _reduce(g: Rearrangement, allow_flips: bool = True, rng=None) -> tuple:
    """Apply reductions until none is possible; returns the reduced pieces.

    The result does not depend on the candidate order; ``rng`` shuffles it
    for the order-independence property tests.
    """
    domain, range_, phi, flips = g.domain, g.range_, dict(g.phi), set(g.flips)
    system = g.system
    while True:
        parents: dict = {}
        for w in domain.cells:
            if len(w) > 1 and w not in flips:
                parents.setdefault(w[:-1], []).append(w)
        move = None
        order = sorted(parents)
        if rng is not None:
            rng.shuffle(order)
        for u in order:
            kids = parents[u]
            color = domain.cell_color(u + (kids[0][-1],)) if False else None
            rule_color = _word_color(system, domain.base, u)
            rule = system.rules[rule_color]
            names = {e.name for e in rule.graph.edges}
            if {w[-1] for w in kids} != names:
                continue
            images = [phi[u + (e,)] for e in sorted(names)]
            vparents = {v[:-1] for v in images}
            if len(vparents) != 1:
                continue
            vp = vparents.pop()
            if not vp:
                continue
            letter_map = {w[-1]: phi[w][-1] for w in kids}
            flip = None
            if all(letter_map[e] == e for e in names):
                flip = False
            elif allow_flips and rule_color in system.validate().undirected_colors:
                psi = system.reversing_automorphism(rule_color)
                if psi is not None and all(letter_map[e] == psi.edge_map[e] for e in names):
                    flip = True
            if flip is None:
                continue
            try:
                new_domain = domain.reduce(kids)
                new_range = range_.reduce([phi[w] for w in kids])
            except Exception:
                continue
            move = (u, vp, kids, flip, new_domain, new_range)
            break
        if move is None:
            return domain, range_, phi, frozenset(flips)
        u, vp, kids, flip, domain, range_ = move
        for w in kids:
            del phi[w]
        phi[u] = vp
        if flip:
            flips.add(u)


def _word_color(system: ReplacementSystem, base: ColoredGraph, word: Word) -> str:
    g = base
    color = None
    for letter in word:
        color = g.edge(letter).color
        g = system.rules[color].graph
    assert color is not None
    return color


def reduced_flipless(g: Rearrangement) -> Rearrangement:
    h = g.flipless()
    domain, range_, phi, flips = _reduce(h, allow_flips=False)
    assert not flips
    return Rearrangement(domain, phi, range_, (), _reduced=True)


def reduce_with_order(g: Rearrangement, rng) -> Rearrangement:
    """Reduce with a randomized candidate order (for confluence testing)."""
    domain, range_, phi, flips = _reduce(g, rng=rng)
    return Rearrangement(domain, phi, range_, flips, _reduced=True)


# -- group and groupoid operations ----------------------------------------------


def identity(system: ReplacementSystem, base: Optional[ColoredGraph] = None) -> Rearrangement:
    exp = base_expansion(system, base)
    return Rearrangement(exp, {w: w for w in exp.cells}, exp)


def compose(g: Rearrangement, h: Rearrangement) -> Rearrangement:
    """The composite ``g after h`` (apply h first)."""
    if g.system is not h.system:
        raise SystemMismatch("elements live over different systems")
    if g.domain.base != h.range_.base:
        raise SystemMismatch("inner base graphs do not match")
    gf, hf = g.flipless(), h.flipless()
    mid = minimal_refinement(gf.domain, hf.range_)
    gf = gf.expand_domain_to(mid.cells)
    hf = hf.expand_range_to(mid.cells)
    hinv = {v: w for w, v in hf.phi.items()}
    phi = {hinv[m]: gf.phi[m] for m in mid.cells}
    return Rearrangement(hf.domain, phi, gf.range_)


def invert(g: Rearrangement) -> Rearrangement:
    gf = g
    # flipped pairs invert through psi inverse; expand them unless psi is an involution
    for w in sorted(gf.flips):
        color = gf.domain.cell_color(w)
        psi = gf.psi(color)
        em = psi.edge_map
        if any(em[em[e]] != e for e in em):
            gf = gf.expand_at(w)
            return invert(gf)
    phi = {}
    flips = []
    for w, v in gf.phi.items():
        phi[v] = w
        if w in gf.flips:
            flips.append(v)
    return Rearrangement(gf.range_, phi, gf.domain, flips)


def equals(g: Rearrangement, h: Rearrangement) -> bool:
    return g == h


def power(g: Rearrangement, n: int) -> Rearrangement:
    if n < 0:
        return power(invert(g), -n)
    out = identity(g.system, g.domain.base)
    for _ in range(n):
        out = compose(g, out)
    return out


def conjugate_by(g: Rearrangement, k: Rearrangement) -> Rearrangement:
    """k^-1 g k."""
    return compose(invert(k), compose(g, k))


def product(factors) -> Rearrangement:
    """Group word read left to right, leftmost factor applied first."""
    factors = list(factors)
    if not factors:
        raise ValueError("empty product")
    out = factors[0]
    for g in factors[1:]:
        out = compose(g, out)
    return out


def commutator(a: Rearrangement, b: Rearrangement) -> Rearrangement:
    """[a, b] = a^-1 b^-1 a b, read with the leftmost factor applied first."""
    return product([invert(a), invert(b), a, b])


def from_pair(domain: GraphExpansion, phi: dict, range_: GraphExpansion,
              flips: Iterable[Word] = ()) -> Rearrangement:
    return Rearrangement(domain, phi, range_, flips)


def reduce_pair(g: Rearrangement) -> Rearrangement:
    """The unique reduced diagram equivalent to the given one."""
    return Rearrangement(g.domain, g.phi, g.range_, g.flips)


def from_cell_map(system: ReplacementSystem, pairs, flips=()) -> Rearrangement:
    """Build an element from (domain word, range word) pairs."""
    phi = {tuple(a): tuple(b) for a, b in pairs}
    domain = GraphExpansion(system, list(phi))
    range_ = GraphExpansion(system, list(phi.values()))
    return Rearrangement(domain, phi, range_, flips)


# -- random elements --------------------------------------------------------------


def random_rearrangement(system: ReplacementSystem, rng, expansions: int = 3,
                         factors: int = 2) -> Rearrangement:
    """Seeded random element: product of random elementary diagrams.

    An elementary diagram picks random domain and range expansions with
    matching color sequences and a random leaf-graph isomorphism between
    them (orientation flips allowed on undirected colors).
    """
    out = identity(system)
    for _ in range(factors):
        out = compose(out, _random_elementary(system, rng, expansions))
    return out


def _random_elementary(system: ReplacementSystem, rng, expansions: int) -> Rearrangement:
    from .graphs import isomorphisms

    undirected = frozenset(system.validate().undirected_colors)
    for _attempt in range(12):
        k = rng.randint(0, expansions)
        dom = base_expansion(system)
        colors = []
        for _ in range(k):
            w = rng.choice(dom.cells)
            colors.append(dom.cell_color(w))
            dom = dom.expand(w)
        ran = base_expansion(system)
        ok = True
        for c in colors:
            options = [w for w in ran.cells if ran.cell_color(w) == c]
            if not options:
                ok = False
                break
            ran = ran.expand(rng.choice(options))
        if not ok:
            continue
        isos = isomorphisms(dom.leaf_graph, ran.leaf_graph, flip_colors=undirected, limit=24)
        if not isos:
            continue
        iso = rng.choice(isos)
        phi = {_parse_cell(a): _parse_cell(b) for a, b in iso.edge_map.items()}
        flips = [_parse_cell(a) for a in iso.flipped]
        try:
            return Rearrangement(dom, phi, ran, flips)
        except (NotAnIsomorphism, TypeMismatch, BadFlip):
            continue
    return identity(system)
