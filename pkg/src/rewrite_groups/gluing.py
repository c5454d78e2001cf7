"""The gluing automaton: a finite-state recognizer for the gluing relation.

Two address sequences are glued exactly when their equal-length prefixes
always share a vertex.  The automaton tracks how the two current edges touch:
states q0(i) mean "still equal, inside color i"; states q1(i g; j d) record
the colors of the diverged edges and the adjacency type on each side, one of
in / out / lp / db+ / db- (the shared vertex is the edge's head, its tail,
its loop base, or the edges share both endpoints, parallel or antiparallel).
Loop-uniformity is arranged first by splitting colors, so every boundary is a
single vertex for loop colors and an (iota, tau) pair otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .replacement import (
    RationalSequence,
    ReplacementSystem,
    Rule,
    base_expansion,
    normalize_loops,
    translate_word,
)

Word = tuple

IN, OUT, LP, DBP, DBM = "in", "out", "lp", "db+", "db-"


class NotExpanding(ValueError):
    pass


class NotInSymbolSpace(ValueError):
    pass


class FiniteBranchingUnknown(ValueError):
    pass


@dataclass(frozen=True)
class GluingAutomaton:
    system: ReplacementSystem          # loop-normalized
    original: ReplacementSystem
    states: tuple
    transitions: dict                  # (state, (a, b)) -> state

    @property
    def initial(self):
        return ("q0", "0")

    def step(self, state, pair):
        return self.transitions.get((state, pair))

    def state_count(self) -> int:
        return len(self.states)

    def transition_count(self) -> int:
        return len(self.transitions)


def _adjacency_type(edge, anchor) -> Optional[str]:
    """How an edge touches a single anchor vertex: out, in or lp."""
    at_src = edge.src == anchor
    at_dst = edge.dst == anchor
    if at_src and at_dst:
        return LP
    if at_src:
        return OUT
    if at_dst:
        return IN
    return None


def _type1_state(a, b) -> Optional[tuple]:
    """Adjacency classification of two distinct edges of one graph."""
    if a.is_loop and b.is_loop:
        return (LP, LP) if a.src == b.src else None
    if a.is_loop:
        t = _adjacency_type(b, a.src)
        return (LP, t) if t else None
    if b.is_loop:
        t = _adjacency_type(a, b.src)
        return (t, LP) if t else None
    shared = {a.src, a.dst} & {b.src, b.dst}
    if not shared:
        return None
    if len(shared) == 2:
        if a.src == b.src and a.dst == b.dst:
            return (DBP, DBP)
        return (DBP, DBM)
    v = shared.pop()
    return (_adjacency_type(a, v), _adjacency_type(b, v))


# The Type 2 table: given the tracked adjacency (gamma for the first edge,
# delta for the second), the anchors each side must touch, and the induced new
# adjacency per incidence.  For db+ the two anchors pair (tau,tau)/(iota,iota),
# for db- they pair crosswise.


def _anchor(rule: Rule, gamma: str):
    if gamma == IN:
        return rule.tau
    if gamma == OUT:
        return rule.iota
    if gamma == LP:
        return rule.iota  # loop rules carry a single boundary vertex
    raise ValueError(gamma)


def _type2_single(rule: Rule, gamma: str, edge) -> Optional[str]:
    return _adjacency_type(edge, _anchor(rule, gamma))


def build(system: ReplacementSystem) -> GluingAutomaton:
    """Compile the gluing automaton of an expanding system.

    Loops are normalized away first; unreachable states are trimmed.
    """
    norm = normalize_loops(system)
    if not norm.validate().expanding:
        raise NotExpanding("the gluing automaton needs an expanding system")
    contexts = [("0", None)] + [(c, c) for c in norm.colors]
    transitions = {}
    # Type 0: both sequences still read the same edge
    for tag, ctx in contexts:
        g = norm.graph_of(ctx)
        for e in g.edges:
            transitions[(("q0", tag), (e.name, e.name))] = ("q0", e.color)
    # Type 1: first divergence inside one graph
    for tag, ctx in contexts:
        g = norm.graph_of(ctx)
        for a in g.edges:
            for b in g.edges:
                if a.name == b.name:
                    continue
                t = _type1_state(a, b)
                if t is None:
                    continue
                transitions[(("q0", tag), (a.name, b.name))] = (
                    "q1", a.color, t[0], b.color, t[1])
    # Type 2: track adjacency through simultaneous expansions
    single = (IN, OUT, LP)
    q1_states = set()
    for i in norm.colors:
        for j in norm.colors:
            for gamma in single:
                for delta in single:
                    q1_states.add(("q1", i, gamma, j, delta))
            q1_states.add(("q1", i, DBP, j, DBP))
            q1_states.add(("q1", i, DBP, j, DBM))
    for state in sorted(q1_states):
        _, i, gamma, j, delta = state
        rule_i, rule_j = norm.rules[i], norm.rules[j]
        for a in rule_i.graph.edges:
            for b in rule_j.graph.edges:
                if gamma in single and delta in single:
                    alpha = _type2_single(rule_i, gamma, a)
                    beta = _type2_single(rule_j, delta, b)
                    if alpha and beta:
                        transitions[(state, (a.name, b.name))] = (
                            "q1", a.color, alpha, b.color, beta)
                elif gamma == DBP:
                    # double adjacency needs two distinct boundary vertices on
                    # both sides, so loop-kind colors never reach these states
                    if rule_i.kind == "loop" or rule_j.kind == "loop":
                        continue
                    if delta == DBP:
                        pairs = [(rule_i.tau, rule_j.tau), (rule_i.iota, rule_j.iota)]
                    else:
                        pairs = [(rule_i.tau, rule_j.iota), (rule_i.iota, rule_j.tau)]
                    hits = set()
                    for anchor_a, anchor_b in pairs:
                        alpha = _adjacency_type(a, anchor_a)
                        beta = _adjacency_type(b, anchor_b)
                        if alpha and beta:
                            hits.add((alpha, beta))
                    if len(hits) > 1:
                        raise NotExpanding(
                            "ambiguous double adjacency; system is not expanding")
                    if hits:
                        alpha, beta = hits.pop()
                        transitions[(state, (a.name, b.name))] = (
                            "q1", a.color, alpha, b.color, beta)
    # trim unreachable states
    reachable = {("q0", "0")}
    frontier = [("q0", "0")]
    while frontier:
        q = frontier.pop()
        for (state, pair), nxt in transitions.items():
            if state == q and nxt not in reachable:
                reachable.add(nxt)
                frontier.append(nxt)
    transitions = {
        (state, pair): nxt
        for (state, pair), nxt in transitions.items()
        if state in reachable
    }
    states = tuple(sorted(reachable))
    return GluingAutomaton(norm, system, states, transitions)


# -- running on rational sequences -------------------------------------------------


def _normalized_sequence(aut: GluingAutomaton, s: RationalSequence) -> RationalSequence:
    """Translate into the loop-normalized alphabet and re-detect the lasso.

    Splitting a color can lengthen the preperiod and multiply the period (the
    translation of a letter depends on which rule copy is being read), but the
    context colors cycle with a bounded factor, so a window proportional to
    the number of colors always contains the new lasso.
    """
    if aut.system is aut.original:
        return s
    p = len(s.period)
    factor = len(aut.system.colors) + 2
    n = len(s.prefix) + (2 * factor + 2) * p * factor
    word = translate_word(aut.system, aut.original, s.prefix_of_length(n))
    for i in range(len(s.prefix), n):
        for m in range(1, factor + 1):
            q = m * p
            if i + 2 * q > n:
                break
            if word[i: i + q] == word[i + q: i + 2 * q]:
                return RationalSequence.make(word[:i], word[i: i + q])
    raise NotInSymbolSpace("translation did not stabilize; not periodic")


def glued(system_or_aut, s1: RationalSequence, s2: RationalSequence) -> bool:
    """Decide the gluing relation on two rational sequences.

    The synchronized pair is run on the automaton until the lasso state
    (automaton state, phase of each input) repeats, which decides acceptance.
    """
    aut = system_or_aut if isinstance(system_or_aut, GluingAutomaton) else build(system_or_aut)
    for s in (s1, s2):
        probe = len(s.prefix) + 2 * len(s.period) + 1
        if not aut.original.language_contains(s.prefix_of_length(probe)):
            raise NotInSymbolSpace(f"{s} is not in the symbol space")
    t1 = _normalized_sequence(aut, s1)
    t2 = _normalized_sequence(aut, s2)
    state = aut.initial
    seen = set()
    i = 0
    def phase(t, i):
        if i < len(t.prefix):
            return ("p", i)
        return ("c", (i - len(t.prefix)) % len(t.period))
    while True:
        key = (state, phase(t1, i), phase(t2, i))
        if key in seen:
            return True
        seen.add(key)
        state = aut.step(state, (t1.letter(i), t2.letter(i)))
        if state is None:
            return False
        i += 1


def glued_brute_force(system: ReplacementSystem, s1: RationalSequence,
                      s2: RationalSequence, depth: Optional[int] = None,
                      state_bound: Optional[int] = None) -> bool:
    """Independent oracle: level-by-level shared-vertex check on expansions.

    Adjacency of the two prefixes is eventually periodic: past both preperiods
    the pair of addresses cycles with period lcm(|p1|, |p2|), and endpoint
    identifications stabilize after one extra sweep, so checking to the
    default depth (preperiods plus four joint periods plus slack) decides the
    relation; an explicit depth overrides the bound.
    """
    if depth is None:
        import math

        joint = (len(s1.period) * len(s2.period)
                 // math.gcd(len(s1.period), len(s2.period)))
        depth = max(len(s1.prefix), len(s2.prefix)) + 4 * joint + 8
    exp = base_expansion(system)
    for n in range(1, depth + 1):
        w1, w2 = s1.prefix_of_length(n), s2.prefix_of_length(n)
        exp = _expand_along(system, exp, w1)
        exp = _expand_along(system, exp, w2)
        e1 = exp.cell_edge(w1)
        e2 = exp.cell_edge(w2)
        if not ({e1.src, e1.dst} & {e2.src, e2.dst}):
            return False
    return True


def _expand_along(system, exp, word):
    cells = set(exp.cells)
    for k in range(1, len(word)):
        if word[:k] in cells:
            exp = exp.expand(word[:k])
            cells = set(exp.cells)
    return exp


def gluing_class(system: ReplacementSystem, s: RationalSequence) -> set:
    """All rational sequences glued to s (finite for finite-branching systems).

    Partners are read off the product of the automaton with s's lasso: the
    product is deterministic in the partner letter, so its live infinite paths
    biject with the class; finite branching keeps the path set finite.
    """
    if not system.validate().finite_branching_sufficient:
        raise FiniteBranchingUnknown(
            "gluing classes are only enumerated under the degree-one condition")
    aut = build(system)
    t = _normalized_sequence(aut, s)
    L = len(t.prefix)
    P = len(t.period)

    def phase(i):
        return i if i < L else L + (i - L) % P

    # product nodes (state, phase); partner-labeled edges
    succ: dict = {}
    nodes = set()
    frontier = [(aut.initial, 0)]
    while frontier:
        state, ph = frontier.pop()
        if (state, ph) in nodes:
            continue
        nodes.add((state, ph))
        i = ph
        for (st, pair), nxt in aut.transitions.items():
            if st != state or pair[0] != t.letter(i):
                continue
            ph2 = phase(i + 1)
            succ.setdefault((state, ph), []).append((pair[1], (nxt, ph2)))
            frontier.append((nxt, ph2))
    # live nodes: can reach a cycle
    live = set()
    for node in nodes:
        seen = set()
        stack = [node]
        ok = False
        while stack:
            x = stack.pop()
            for _b, y in succ.get(x, []):
                if y == node or y in live:
                    ok = True
                    stack = []
                    break
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if ok:
            live.add(node)
    # iterate to closure
    changed = True
    while changed:
        changed = False
        for node in nodes - live:
            if any(y in live for _b, y in succ.get(node, [])):
                live.add(node)
                changed = True
    out = set()
    cap = 4 * (len(nodes) + 2)

    def dfs(node, path_nodes, labels):
        if len(labels) > cap:
            raise FiniteBranchingUnknown("partner enumeration did not close")
        for b, y in succ.get(node, []):
            if y not in live:
                continue
            if y in path_nodes:
                j = path_nodes.index(y)
                prefix = tuple(labels[:j])
                period = tuple(labels[j:] + [b])
                try:
                    cand = RationalSequence.make(prefix, period)
                except ValueError:
                    continue
                out.add(cand)
                continue
            dfs(y, path_nodes + [y], labels + [b])

    root = (aut.initial, 0)
    if root in live:
        dfs(root, [root], [])
    out = {c for c in out if glued(aut, t, c)}
    out.add(RationalSequence.make(t.prefix, t.period))
    if aut.system is aut.original:
        return out
    # translate partners back to the original alphabet
    back = set()
    for cand in out:
        back.add(_translate_back(aut, cand))
    return back


def _translate_back(aut: GluingAutomaton, t: RationalSequence) -> RationalSequence:
    origin = aut.system.letter_origin
    n = len(t.prefix) + 2 * len(t.period)
    letters = []
    ctx = None
    for i in range(n):
        letter = t.letter(i)
        letters.append(origin.get((ctx, letter), letter))
        ctx = aut.system.letter_color(ctx, letter)
    for k in range(len(t.prefix), n - len(t.period)):
        assert letters[k] == letters[k + len(t.period)], "translation not periodic"
    return RationalSequence.make(
        tuple(letters[: len(t.prefix)]),
        tuple(letters[len(t.prefix): len(t.prefix) + len(t.period)]),
    )


# -- emitters ------------------------------------------------------------------------


def _state_str(state) -> str:
    if state[0] == "q0":
        return f"q0({state[1]})"
    _, i, g, j, d = state
    return f"q1({i} {g}; {j} {d})"


def automaton_to_dot(aut: GluingAutomaton, name: str = "Gl") -> str:
    lines = [f'digraph "{name}" {{', "  rankdir=LR;",
             '  start [shape=point];']
    for q in aut.states:
        lines.append(f'  "{_state_str(q)}" [shape=ellipse];')
    lines.append(f'  start -> "{_state_str(aut.initial)}";')
    grouped: dict = {}
    for (state, pair), nxt in sorted(aut.transitions.items()):
        grouped.setdefault((state, nxt), []).append(pair)
    for (state, nxt), pairs in grouped.items():
        label = ", ".join(f"({a},{b})" for a, b in pairs)
        lines.append(f'  "{_state_str(state)}" -> "{_state_str(nxt)}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines)


def automaton_to_json(aut: GluingAutomaton) -> dict:
    return {
        "states": [_state_str(q) for q in aut.states],
        "initial": _state_str(aut.initial),
        "transitions": [
            {"from": _state_str(state), "pair": list(pair), "to": _state_str(nxt)}
            for (state, pair), nxt in sorted(aut.transitions.items())
        ],
    }
