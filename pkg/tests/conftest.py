import random

import pytest

from rewrite_groups.catalog import catalog
from rewrite_groups.rearrangement import from_cell_map
from rewrite_groups.replacement import RationalSequence


def f_generators():
    """The standard tree-pair generators of Thompson's group F."""
    F = catalog("interval_F")
    x0 = from_cell_map(F, [
        (("s", "0", "0"), ("s", "0")),
        (("s", "0", "1"), ("s", "1", "0")),
        (("s", "1"), ("s", "1", "1")),
    ])
    x1 = from_cell_map(F, [
        (("s", "0"), ("s", "0")),
        (("s", "1", "0", "0"), ("s", "1", "0")),
        (("s", "1", "0", "1"), ("s", "1", "1", "0")),
        (("s", "1", "1"), ("s", "1", "1", "1")),
    ])
    return F, x0, x1


def t_rotation():
    T = catalog("circle_T")
    y = from_cell_map(T, [(("s", "0"), ("s", "1")), (("s", "1"), ("s", "0"))])
    return T, y


def random_rational(system, rng, max_prefix=3, max_period=2):
    """A random element of the symbol space, as a normalized lasso."""
    for _ in range(500):
        word = []
        ctx = None
        n = rng.randint(1, max_prefix)
        k = rng.randint(1, max_period)
        for _i in range(n + k + 8):
            g = system.graph_of(ctx)
            e = rng.choice(g.edges)
            word.append(e.name)
            ctx = e.color
        pre, per = tuple(word[:n]), tuple(word[n:n + k])
        if system.language_contains(pre + per * 5):
            try:
                return RationalSequence.make(pre, per)
            except ValueError:
                continue
    raise RuntimeError("could not sample a rational sequence")


@pytest.fixture
def rng():
    return random.Random(20260809)
