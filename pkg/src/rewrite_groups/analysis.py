"""Constructive dynamics of rearrangements and dendrite-group invariants.

The forest difference of a pair diagram (carets in the domain forest missing
from the range forest and vice versa) drives everything here: minimizing it
by iterated expansions decides torsion, and for non-torsion elements exhibits
a cell whose interior is disjoint from all its forward images.  The dendrite
systems additionally carry a parity map and an endpoint derivative whose
product is a homomorphism onto Z_2 + Z with the commutator subgroup as kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

from .rearrangement import (
    Rearrangement,
    compose,
    from_cell_map,
    identity,
    power,
    reduced_flipless,
)
from .replacement import ReplacementSystem

Word = tuple


class IsTorsion(ValueError):
    pass


class NotDendriteSystem(ValueError):
    pass


class BadParams(ValueError):
    pass


# -- imbalance and components -------------------------------------------------------


def _expanded_words(cells) -> set:
    """Interior nodes of the forest: proper nonempty prefixes of the cells."""
    out = set()
    for w in cells:
        for k in range(1, len(w)):
            out.add(w[:k])
    return out


@dataclass(frozen=True)
class ImbalanceProfile:
    domain: int
    range: int
    domain_components: tuple  # tuples of caret words, rooted
    range_components: tuple

    def as_tuple(self):
        return (self.domain, len(self.domain_components), len(self.range_components))


def _components_of(carets: set) -> tuple:
    """Cluster a caret set into the maximal trees it forms."""
    comps = []
    seen = set()
    for root in sorted(carets, key=lambda w: (len(w), w)):
        if root in seen:
            continue
        comp = [root]
        seen.add(root)
        queue = [root]
        while queue:
            w = queue.pop()
            for v in carets:
                if v not in seen and len(v) == len(w) + 1 and v[: len(w)] == w:
                    seen.add(v)
                    comp.append(v)
                    queue.append(v)
        # only roots without a caret parent start components
        if root[:-1] in carets:
            continue
        comps.append(tuple(sorted(comp)))
    # rebuild ignoring nested roots
    all_c = set(carets)
    comps = []
    assigned = set()
    roots = [w for w in all_c if w[:-1] not in all_c]
    for root in sorted(roots, key=lambda w: (len(w), w)):
        comp = [root]
        queue = [root]
        while queue:
            w = queue.pop()
            for v in all_c:
                if v not in comp and len(v) > len(w) and v[: len(w)] == w and v[:-1] in comp:
                    comp.append(v)
                    queue.append(v)
        comps.append(tuple(sorted(comp)))
        assigned |= set(comp)
    return tuple(sorted(comps))


def imbalance(g: Rearrangement, representative: Rearrangement = None) -> ImbalanceProfile:
    """Caret difference of the two forests of a (default: canonical) diagram."""
    d = representative if representative is not None else reduced_flipless(g)
    fd = _expanded_words(d.domain.cells)
    fr = _expanded_words(d.range_.cells)
    dm = fd - fr
    rm = fr - fd
    return ImbalanceProfile(len(dm), len(rm), _components_of(dm), _components_of(rm))


# -- minimization -----------------------------------------------------------------


def _expandable_chains(d: Rearrangement):
    """Chains u1..un of domain cells with u_{i+1} = phi(u_i), all distinct."""
    cells = set(d.domain.cells)
    for u in sorted(cells):
        chain = [u]
        seen = {u}
        while True:
            nxt = d.phi[chain[-1]]
            if nxt in seen:
                break
            yield list(chain), nxt
            if nxt not in cells:
                break
            chain.append(nxt)
            seen.add(nxt)


def minimize_representative(g: Rearrangement) -> Rearrangement:
    """Drive the diagram to a fixed point of the three forbidden patterns.

    Each applied iterated expansion strictly decreases the lexicographic
    profile (domain imbalance, #components of F_D - F_R, #components of
    F_R - F_D), so this terminates; the result supports the wandering-cell
    construction for non-torsion elements.
    """
    d = reduced_flipless(g)
    while True:
        prof = imbalance(d, d)
        move = _find_move(d, prof)
        if move is None:
            return d
        d = move


def _caret_subtree(carets_all: set, root: Word) -> set:
    return {w for w in carets_all if w[: len(root)] == root}


def _find_move(d: Rearrangement, prof: ImbalanceProfile):
    fd = _expanded_words(d.domain.cells)
    fr = _expanded_words(d.range_.cells)
    dm = fd - fr
    rm = fr - fd
    dcells = set(d.domain.cells)
    rcells = set(d.range_.cells)
    moves = []
    for chain, end in _expandable_chains(d):
        u1 = chain[0]
        # u1 is a domain cell by construction; end = phi(last)
        u1_interior_r = u1 in fr
        end_interior_d = end in fd
        if u1_interior_r and end_interior_d:
            sub = _caret_subtree(dm, end)
            if sub:
                moves.append((1, len(chain), chain, end, sub, "d"))
                continue
        if (u1 not in fr and u1 not in rcells) and end_interior_d:
            comp_end = _component_containing(prof.domain_components, end)
            comp_u1 = _component_containing(prof.domain_components, u1)
            if comp_end is not None and comp_end != comp_u1:
                sub = _caret_subtree(dm, end)
                if sub:
                    moves.append((2, len(chain), chain, end, sub, "d"))
                    continue
        if (end not in fd and end not in dcells) and u1_interior_r:
            comp_u1 = _component_containing(prof.range_components, u1)
            comp_end = _component_containing(prof.range_components, end)
            if comp_u1 is not None and comp_u1 != comp_end:
                sub = _caret_subtree(rm, u1)
                if sub:
                    moves.append((3, len(chain), chain, u1, sub, "r"))
    if not moves:
        return None
    moves.sort(key=lambda m: (m[0], m[1]))
    _kind, _n, chain, root, sub, _side = moves[0]
    out = d
    rel = sorted({w[len(root):] for w in sub}, key=len)
    for u in chain:
        for suffix in rel:
            out = out.expand_at(u + suffix)
    return out


def _component_containing(components, word):
    for comp in components:
        for caret in comp:
            if word[: len(caret)] == caret or caret[: len(word)] == word:
                return comp
    return None


# -- torsion and wandering cells ---------------------------------------------------


def _permutation_order(perm: dict) -> int:
    import math

    seen = set()
    order = 1
    for start in perm:
        if start in seen:
            continue
        n = 0
        x = start
        while True:
            x = perm[x]
            n += 1
            seen.add(x)
            if x == start:
                break
        order = order * n // math.gcd(order, n)
    return order


def is_torsion(g: Rearrangement):
    """(True, order) for torsion elements, else (False, None).

    The minimized representative has equal forests exactly for torsion
    elements; the order is then the order of the induced cell permutation.
    """
    d = minimize_representative(g)
    if set(d.domain.cells) == set(d.range_.cells):
        if all(d.phi[w] == w for w in d.phi) and not d.flips:
            return True, 1
        if g.is_identity():
            return True, 1
        # flips square to the identity on the flipped cell's subtree
        base_order = _permutation_order(d.phi)
        order = base_order
        if d.flips:
            h = power(g, order)
            extra = 1
            while not h.is_identity():
                h = compose(h, power(g, order))
                extra += 1
            order *= extra
        return True, order
    return False, None


def wandering_cell(g: Rearrangement) -> Word:
    """A word whose cell interior is disjoint from its nontrivial power-images.

    Following the minimized diagram: some domain cell e is expanded in the
    range, its sigma-orbit returns inside e, and any other child of e in the
    range is then wandering.
    """
    d = minimize_representative(g)
    if set(d.domain.cells) == set(d.range_.cells):
        raise IsTorsion("torsion elements have no wandering cell")
    fd = _expanded_words(d.domain.cells)
    rcells = set(d.range_.cells)
    dcells = set(d.domain.cells)
    for e in sorted(dcells):
        if e not in _expanded_words(d.range_.cells):
            continue
        # follow the orbit of e until it lands below e
        seen = [e]
        x = e
        for _ in range(len(dcells) + 1):
            x = d.phi[x] if x in d.phi else None
            if x is None:
                break
            if len(x) > len(e) and x[: len(e)] == e:
                e_star = x
                kids = sorted(w for w in rcells if len(w) > len(e) and w[: len(e)] == e
                              and w != e_star)
                if kids:
                    return kids[0]
                break
            if x not in dcells:
                break
    raise AssertionError("no wandering cell found on a non-torsion element")


def wandering_certificate(g: Rearrangement, word: Word, powers: int = 8) -> bool:
    """Symbolic check: no g^n-image of the word is prefix-comparable with it."""
    w = tuple(word)
    x = w
    for _n in range(1, powers + 1):
        x = g.apply_word(x)
        shorter = min(len(x), len(w))
        if x[:shorter] == w[:shorter]:
            return False
    return True


# -- dendrite invariants ------------------------------------------------------------


def _dendrite_order(system: ReplacementSystem) -> int:
    """The branching order n of a dendrite-style system, or raise."""
    if len(system.colors) != 1:
        raise NotDendriteSystem("dendrite systems are monochromatic")
    c = system.colors[0]
    rule = system.rules[c]
    g = rule.graph
    n = len(g.edges)
    if n < 3 or len(g.vertices) != n + 1:
        raise NotDendriteSystem("replacement graph is not a star")
    centers = [v for v in g.vertices if g.degree(v) == n]
    if len(centers) != 1 or any(e.src != centers[0] for e in g.edges):
        raise NotDendriteSystem("replacement graph is not an outward star")
    return n


def _branch_index(system, expansion, vertex) -> dict:
    """Map each incident cell of a degree-n vertex to its branch index."""
    inc = [e for e in expansion.leaf_graph.edges if vertex in (e.src, e.dst)]
    words = [tuple(e.name.split(" ")) for e in inc]
    # all incident words are x i 1^k for a common x, so x is their LCP
    prefix_len = 0
    while all(len(w) > prefix_len for w in words) and len(
        {w[prefix_len] for w in words}
    ) == 1:
        prefix_len += 1
    out = {}
    for w in words:
        assert len(w) > prefix_len, "incident word too short for a branch index"
        out[w] = int(w[prefix_len])
    return out


def _perm_sign(perm: dict) -> int:
    seen = set()
    sign = 0
    for s in perm:
        if s in seen:
            continue
        n = 0
        x = s
        while x not in seen:
            seen.add(x)
            x = perm[x]
            n += 1
        sign += n - 1
    return sign % 2


def dendrite_parity(g: Rearrangement) -> int:
    """Sum over branch points of the sign of the induced branch permutation."""
    _dendrite_order(g.system)
    d = reduced_flipless(g)
    total = 0
    LG_D, LG_R = d.domain.leaf_graph, d.range_.leaf_graph
    n = _dendrite_order(g.system)
    vmap = {}
    for w, v in d.phi.items():
        ed, er = d.domain.cell_edge(w), d.range_.cell_edge(v)
        vmap[ed.src] = er.src
        vmap[ed.dst] = er.dst
    for vertex in LG_D.vertices:
        if LG_D.degree(vertex) != n:
            continue
        bi_d = _branch_index(g.system, d.domain, vertex)
        bi_r = _branch_index(g.system, d.range_, vmap[vertex])
        perm = {}
        for w, i in bi_d.items():
            image = d.phi[_covering_cell(d, w)]
            image_word = image + w[len(_covering_cell(d, w)):]
            perm[i] = bi_r[image_word]
        total += _perm_sign(perm)
    return total % 2


def _covering_cell(d: Rearrangement, word: Word) -> Word:
    for w in d.domain.cells:
        if word[: len(w)] == w:
            return w
    raise KeyError(word)


def _trailing_n(system, word: Word, n: int) -> int:
    """Count of n's at the end, ignoring the first letter of an all-n word."""
    body = word[1:] if all(x == str(n) for x in word) else word
    count = 0
    for x in reversed(body):
        if x == str(n):
            count += 1
        else:
            break
    return count


def dendrite_derivative(g: Rearrangement) -> int:
    """Sum over rational endpoints in the diagram of the local log-derivative."""
    n = _dendrite_order(g.system)
    d = reduced_flipless(g)
    total = 0
    for vertex in d.domain.leaf_graph.vertices:
        if d.domain.leaf_graph.degree(vertex) != 1:
            continue
        edge = next(e for e in d.domain.leaf_graph.edges if vertex in (e.src, e.dst))
        w = tuple(edge.name.split(" "))
        v = d.phi[w]
        total += _trailing_n(g.system, w, n) - _trailing_n(g.system, v, n)
    return total


def dendrite_phi(g: Rearrangement) -> tuple:
    """The abelianization map: (parity, endpoint derivative)."""
    return (dendrite_parity(g), dendrite_derivative(g))


# -- dendrite generators --------------------------------------------------------------


def dendrite_generators(n: int) -> dict:
    """The elements g0, g1 and the transpositions tau_2..tau_n of the order-n group."""
    from .catalog import dendrite

    if n < 3:
        raise BadParams("dendrite order must be at least 3")
    system = dendrite(n)
    N = str(n)
    mids = [str(i) for i in range(2, n)]

    def tilde(i: str) -> str:
        return str(n + 1 - int(i))

    g0_pairs = []
    g0_pairs.append((("1", N), ("1",)))
    for i in mids:
        g0_pairs.append((("1", i), (tilde(i),)))
    g0_pairs.append((("1", "1", "1"), (N, "1", N)))
    for i in mids:
        g0_pairs.append((("1", "1", i), (N, "1", tilde(i))))
    g0_pairs.append((("1", "1", N), (N, "1", "1")))
    for i in mids:
        g0_pairs.append(((i,), (N, i)))
    g0_pairs.append(((N,), (N, N)))
    g0 = from_cell_map(system, g0_pairs)

    g1_pairs = []
    g1_pairs.append((("1",), ("1",)))
    for i in mids:
        g1_pairs.append(((i,), (i,)))
    g1_pairs.append(((N, "1", N), (N, "1")))
    for i in mids:
        g1_pairs.append(((N, "1", i), (N, tilde(i))))
    g1_pairs.append(((N, "1", "1", "1"), (N, N, "1", N)))
    for i in mids:
        g1_pairs.append(((N, "1", "1", i), (N, N, "1", tilde(i))))
    g1_pairs.append(((N, "1", "1", N), (N, N, "1", "1")))
    for i in mids:
        g1_pairs.append(((N, i), (N, N, i)))
    g1_pairs.append(((N, N), (N, N, N)))
    g1 = from_cell_map(system, g1_pairs)

    out = {"g0": g0, "g1": g1}
    for i in range(2, n + 1):
        pairs = []
        for j in range(1, n + 1):
            if j == 1:
                pairs.append((("1",), (str(i),)))
            elif j == i:
                pairs.append(((str(i),), ("1",)))
            else:
                pairs.append(((str(j),), (str(j),)))
        out[f"tau{i}"] = from_cell_map(system, pairs)
    return out
