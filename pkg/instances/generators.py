"""Seeded generators for the five benchmark families.

Every generator returns the instance together with a witness point that is
feasible by construction; ``generate`` drops the witness.
"""

import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
import scipy.sparse as sp

from core.exceptions import InvalidConfig
from core.seeding import make_rng
from milp.instance import MilpInstance

from .models import Family

logger = logging.getLogger(__name__)

PARAM_NAMES = {
    Family.COMB_AUCTION: ('items', 'bids'),
    Family.SET_COVER: ('items', 'sets'),
    Family.MAX_INDEP_SET: ('nodes', 'affinity'),
    Family.FACILITY_LOC: ('customers', 'facilities'),
    Family.MULTI_KNAPSACK: ('items', 'knapsacks'),
}

SIZE_PRESETS = {
    # brute-force enumerable, used by the oracle sweeps
    'tiny': {
        Family.COMB_AUCTION: {'items': 4, 'bids': 8},
        Family.SET_COVER: {'items': 5, 'sets': 8},
        Family.MAX_INDEP_SET: {'nodes': 8, 'affinity': 2},
        Family.FACILITY_LOC: {'customers': 3, 'facilities': 2},
        Family.MULTI_KNAPSACK: {'items': 4, 'knapsacks': 2},
    },
    'desk': {
        Family.COMB_AUCTION: {'items': 30, 'bids': 150},
        Family.SET_COVER: {'items': 60, 'sets': 120},
        Family.MAX_INDEP_SET: {'nodes': 80, 'affinity': 4},
        Family.FACILITY_LOC: {'customers': 12, 'facilities': 12},
        Family.MULTI_KNAPSACK: {'items': 30, 'knapsacks': 3},
    },
    'train': {
        Family.COMB_AUCTION: {'items': 100, 'bids': 500},
        Family.SET_COVER: {'items': 400, 'sets': 750},
        Family.MAX_INDEP_SET: {'nodes': 500, 'affinity': 4},
        Family.FACILITY_LOC: {'customers': 35, 'facilities': 35},
        Family.MULTI_KNAPSACK: {'items': 100, 'knapsacks': 6},
    },
    'transfer': {
        Family.COMB_AUCTION: {'items': 200, 'bids': 1000},
        Family.SET_COVER: {'items': 500, 'sets': 1000},
        Family.MAX_INDEP_SET: {'nodes': 1000, 'affinity': 4},
        Family.FACILITY_LOC: {'customers': 60, 'facilities': 35},
        Family.MULTI_KNAPSACK: {'items': 100, 'knapsacks': 12},
    },
}

SET_COVER_DENSITY = 0.05
MIN_COVER = 2


@dataclass(frozen=True)
class GenConfig:
    family: Family
    size_params: dict = field(default_factory=dict)
    seed: int = 0

    def validate(self):
        try:
            family = Family(self.family)
        except ValueError:
            raise InvalidConfig(f"unknown family {self.family!r}") from None
        expected = PARAM_NAMES[family]
        if set(self.size_params) != set(expected):
            raise InvalidConfig(f"{family.value} takes size parameters {', '.join(expected)}")
        for key in expected:
            value = self.size_params[key]
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise InvalidConfig(f"{key} must be a positive integer, got {value!r}")
        if family == Family.MAX_INDEP_SET and self.size_params['affinity'] >= self.size_params['nodes']:
            raise InvalidConfig("affinity must be smaller than the number of nodes")
        return family

    def instance_name(self):
        family = Family(self.family)
        dims = 'x'.join(str(self.size_params[k]) for k in PARAM_NAMES[family])
        suffix = '-negmax' if family in _MAXIMISATION else ''
        return f"{family.value}-{dims}-s{self.seed}{suffix}"


def generate(cfg):
    instance, _ = generate_with_witness(cfg)
    return instance


def generate_with_witness(cfg):
    family = cfg.validate()
    rng = make_rng(cfg.seed)
    builder = _BUILDERS[family]
    instance, witness = builder(cfg.instance_name(), rng, **cfg.size_params)
    logger.debug("generated %s: %d vars, %d rows", instance.name, instance.n_vars, instance.n_rows)
    return instance, witness


def _assemble(name, obj, triplets, rhs):
    n_vars, n_rows = len(obj), len(rhs)
    if triplets:
        r, c, v = zip(*triplets)
    else:
        r, c, v = (), (), ()
    rows = sp.csr_matrix((np.asarray(v, dtype=float), (r, c)), shape=(n_rows, n_vars))
    return MilpInstance(
        name=name,
        obj=np.asarray(obj, dtype=float),
        rows=rows,
        rhs=np.asarray(rhs, dtype=float),
        lower=np.zeros(n_vars),
        upper=np.ones(n_vars),
        int_set=tuple(range(n_vars)),
    )


def set_cover(name, rng, items, sets):
    """min Σ x_s  s.t.  Σ_{s∋e} x_s ≥ 1 for every element e, stored as −Σ x_s ≤ −1."""
    cover = rng.random((items, sets)) < SET_COVER_DENSITY
    need = min(MIN_COVER, sets)
    for e in range(items):
        missing = need - int(cover[e].sum())
        if missing > 0:
            free = np.flatnonzero(~cover[e])
            cover[e, rng.choice(free, size=missing, replace=False)] = True
    for s in np.flatnonzero(~cover.any(axis=0)):
        cover[rng.integers(items), s] = True

    triplets = [(int(e), int(s), -1.0) for e, s in zip(*np.nonzero(cover))]
    instance = _assemble(name, np.ones(sets), triplets, -np.ones(items))
    return instance, np.ones(sets)


def comb_auction(name, rng, items, bids):
    """max Σ p_j x_j  s.t.  each item sold at most once; stored negated."""
    base = rng.uniform(1.0, 100.0, size=items)
    p_extra = min(1.0, 3.0 / items)
    prices = np.empty(bids)
    triplets = []
    for j in range(bids):
        size = min(items, 1 + int(rng.binomial(items - 1, p_extra)))
        bundle = np.sort(rng.choice(items, size=size, replace=False))
        synergy = rng.uniform(0.8, 1.5)
        prices[j] = max(1.0, round(float(base[bundle].sum()) * synergy))
        triplets.extend((int(i), j, 1.0) for i in bundle)
    instance = _assemble(name, -prices, triplets, np.ones(items))
    return instance, np.zeros(bids)


def greedy_clique_cover(graph):
    """Cliques covering every edge, built by extending uncovered edges in sorted order."""
    covered = set()
    cliques = []
    for u, v in sorted(tuple(sorted(e)) for e in graph.edges()):
        if (u, v) in covered:
            continue
        clique = [u, v]
        for w in sorted(set(graph[u]) & set(graph[v])):
            if all(graph.has_edge(w, member) for member in clique):
                clique.append(w)
        clique.sort()
        for a_pos, a in enumerate(clique):
            for b in clique[a_pos + 1:]:
                covered.add((a, b))
        cliques.append(tuple(clique))
    return cliques


def max_indep_set(name, rng, nodes, affinity):
    """max Σ x_v  s.t.  Σ_{v∈C} x_v ≤ 1 for each clique of an edge cover; stored negated."""
    graph = nx.barabasi_albert_graph(nodes, affinity, seed=int(rng.integers(2 ** 31)))
    cliques = greedy_clique_cover(graph)
    triplets = [(r, int(v), 1.0) for r, clique in enumerate(cliques) for v in clique]
    instance = _assemble(name, -np.ones(nodes), triplets, np.ones(len(cliques)))
    return instance, np.zeros(nodes)


def _first_fit_decreasing(demand, capacity):
    """Assign every customer to one facility, enlarging capacities where nothing fits."""
    remaining = capacity.astype(float).copy()
    assignment = np.empty(demand.size, dtype=int)
    for j in sorted(range(demand.size), key=lambda k: (-demand[k], k)):
        fits = np.flatnonzero(remaining >= demand[j])
        if fits.size:
            i = int(fits[0])
        else:
            i = int(np.argmax(remaining))
            capacity[i] += demand[j] - remaining[i]
            remaining[i] = demand[j]
        assignment[j] = i
        remaining[i] -= demand[j]
    return assignment


def facility_location(name, rng, customers, facilities):
    """Capacitated facility location with unsplittable demand.

    Variables are ``x[i, j]`` (facility i serves customer j) at ``i * customers + j``
    followed by the opening decisions ``y[i]``.
    """
    c_xy = rng.random((customers, 2))
    f_xy = rng.random((facilities, 2))
    demand = rng.integers(5, 36, size=customers).astype(float)
    capacity = rng.integers(10, 161, size=facilities).astype(float)
    total = 1.2 * demand.sum()
    if capacity.sum() < total:
        capacity = np.ceil(capacity * total / capacity.sum())
    assignment = _first_fit_decreasing(demand, capacity)
    fixed = rng.integers(0, 91, size=facilities) + np.round(100.0 * np.sqrt(capacity))
    distance = np.linalg.norm(f_xy[:, None, :] - c_xy[None, :, :], axis=2)
    transport = np.round(10.0 * distance * demand[None, :])

    n_x = facilities * customers
    obj = np.concatenate([transport.reshape(-1), fixed])
    triplets = []
    for i in range(facilities):
        triplets.extend((i, i * customers + j, float(demand[j])) for j in range(customers))
        triplets.append((i, n_x + i, -float(capacity[i])))
    for j in range(customers):
        triplets.extend((facilities + j, i * customers + j, -1.0) for i in range(facilities))
    rhs = np.concatenate([np.zeros(facilities), -np.ones(customers)])
    instance = _assemble(name, obj, triplets, rhs)

    witness = np.zeros(n_x + facilities)
    witness[assignment * customers + np.arange(customers)] = 1.0
    witness[n_x:] = 1.0
    return instance, witness


def multi_knapsack(name, rng, items, knapsacks):
    """max Σ_i Σ_j p_j x_ij under knapsack capacities, each item packed at most once; stored negated.

    ``x[i, j]`` (item j in knapsack i) sits at ``i * items + j``.
    """
    weight = rng.integers(10, 1001, size=items).astype(float)
    price = rng.integers(10, 1001, size=items).astype(float)
    capacity = np.full(knapsacks, math.floor(0.5 * weight.sum() / knapsacks))
    triplets = []
    for i in range(knapsacks):
        triplets.extend((i, i * items + j, float(weight[j])) for j in range(items))
    for j in range(items):
        triplets.extend((knapsacks + j, i * items + j, 1.0) for i in range(knapsacks))
    rhs = np.concatenate([capacity, np.ones(items)])
    instance = _assemble(name, -np.tile(price, knapsacks), triplets, rhs)
    return instance, np.zeros(items * knapsacks)


_MAXIMISATION = {Family.COMB_AUCTION, Family.MAX_INDEP_SET, Family.MULTI_KNAPSACK}

_BUILDERS = {
    Family.COMB_AUCTION: comb_auction,
    Family.SET_COVER: set_cover,
    Family.MAX_INDEP_SET: max_indep_set,
    Family.FACILITY_LOC: facility_location,
    Family.MULTI_KNAPSACK: multi_knapsack,
}
