"""Shared fixtures: a session-wide cache of assembled solutions.

Assembling a density costs a noticeable fraction of a second, and many
test modules study the same handful of (spec, epsilon) pairs, so solves
are cached for the whole session keyed by the hashable spec.
"""

import pytest

from monge1d.duality import assemble_density
from monge1d.oracles import discrete_primal_minimizer


@pytest.fixture(scope="session")
def solved():
    cache = {}

    def get(spec, epsilon, grid_n=2001, **kwargs):
        key = (spec, float(epsilon), int(grid_n), tuple(sorted(kwargs.items())))
        if key not in cache:
            cache[key] = assemble_density(spec, epsilon, grid_n, **kwargs)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def primal_oracle():
    """Cached projected-descent runs; each costs a second or two."""
    cache = {}

    def get(spec, epsilon, n):
        key = (spec, float(epsilon), int(n))
        if key not in cache:
            cache[key] = discrete_primal_minimizer(spec, epsilon, n)
        return cache[key]

    return get
