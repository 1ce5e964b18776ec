"""Exact expected-spread computation for small instances.

Thresholds are discretized to the m midpoints (i - 0.5)/m per node and every
joint assignment is diffused deterministically.  The outcome of a diffusion
is piecewise constant in each node's threshold, with pieces bounded by the
norms of aggregates the node could ever receive, so midpoints falling in the
same piece are collapsed into one representative cell weighted by its
midpoint count.  The collapsed enumeration equals the full m^n grid average
exactly while keeping the tuple count far below the hard cap.

Midpoints sit strictly between the decimal weights typical of input files,
so grid probabilities of simple events are exact (a single incoming weight w
at m=100 yields activation probability w for two-decimal w).

Purchase ties abort the computation: the oracle is only defined for
tie-free instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channels import AugmentedNetwork
from .diffusion import simulate_batch
from .feature_space import Product, product_matrix
from .network import NodeKind


class EnumerationCapError(Exception):
    pass


@dataclass(frozen=True)
class GridSpec:
    resolution: int
    max_tuples: int = 1 << 24
    # cap on the breakpoint pre-computation per node; beyond it every midpoint
    # becomes its own cell (correct, just slower)
    max_norm_combos: int = 200_000

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError("grid resolution must be >= 1")


@dataclass
class OracleResult:
    product_ids: tuple[int, ...]
    spread: np.ndarray  # (k,) exact expected real-node purchasers
    node_probability: np.ndarray  # (k, n)
    tuples_evaluated: int

    def spread_of(self, product_id: int) -> float:
        return float(self.spread[self.product_ids.index(product_id)])


def _source_product(aug: AugmentedNetwork, node: int) -> int | None:
    """Product index a pseudonode can ever purchase, None for real nodes."""
    info = aug.provenance.get(node)
    if info is None:
        return None
    return aug.product_ids.index(info["product"])


def _breakpoint_norms(aug: AugmentedNetwork, products: list[Product], v: int, cap: int) -> np.ndarray | None:
    """Norms of all aggregate vectors v could receive (superset of reachable)."""
    pmat = product_matrix(products)
    options: list[np.ndarray] = []
    total = 1
    for u, w in aug.net.in_neighbors(v):
        pi = _source_product(aug, u)
        if pi is None:
            opts = np.vstack([np.zeros(pmat.shape[1]), w * pmat])
        else:
            opts = np.vstack([np.zeros(pmat.shape[1]), w * pmat[pi]])
        options.append(opts)
        total *= opts.shape[0]
        if total > cap:
            return None
    acc = np.zeros((1, pmat.shape[1]))
    for opts in options:
        acc = (acc[:, None, :] + opts[None, :, :]).reshape(-1, pmat.shape[1])
    return np.unique(np.sqrt(np.sum(acc * acc, axis=1)))


def _cells_for_node(aug, products, v, grid: GridSpec) -> list[tuple[float, int]]:
    """(representative midpoint, midpoint count) per constant-outcome piece."""
    m = grid.resolution
    mids = (np.arange(m) + 0.5) / m
    norms = _breakpoint_norms(aug, products, v, grid.max_norm_combos)
    if norms is None:
        return [(float(x), 1) for x in mids]
    piece = np.searchsorted(norms, mids, side="left")
    cells = []
    for pid in np.unique(piece):
        idx = np.flatnonzero(piece == pid)
        cells.append((float(mids[idx[0]]), int(idx.size)))
    return cells


def exact_spread_grid(
    aug: AugmentedNetwork,
    products: list[Product],
    grid: GridSpec,
    *,
    pinned: dict[int, float] | None = None,
) -> OracleResult:
    """Exact expected spread under midpoint-discretized thresholds.

    Thresholds are enumerated for every unseeded real node with incoming
    influence, except nodes listed in pinned, whose thresholds are held at
    the given values.  Raises EnumerationCapError past grid.max_tuples and
    PurchaseTieError on any purchase tie.
    """
    pinned = pinned or {}
    net = aug.net
    n = net.node_count
    k = len(products)
    seeds = aug.seed_assignment()
    seeded = set()
    for ns in seeds.by_product:
        seeded |= ns

    base_chi = np.full(n, 2.0)
    fixed = ~np.isnan(net.fixed_threshold)
    base_chi[fixed] = net.fixed_threshold[fixed]
    for node, value in pinned.items():
        base_chi[node] = value

    free = [
        v
        for v in range(n)
        if net.node_kind[v] == NodeKind.REAL
        and v not in seeded
        and v not in pinned
        and len(net.in_neighbors(v)) > 0
    ]
    cell_lists = [_cells_for_node(aug, products, v, grid) for v in free]
    total = math.prod(len(c) for c in cell_lists) if cell_lists else 1
    if total > grid.max_tuples:
        raise EnumerationCapError(f"{total} threshold tuples exceed the cap {grid.max_tuples}")

    m = grid.resolution
    spread = np.zeros(k)
    node_prob = np.zeros((k, n))
    real = net.real_nodes()
    chunk = 4096
    combos = itertools.product(*cell_lists) if cell_lists else iter([()])
    evaluated = 0
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            break
        R = len(block)
        chi = np.tile(base_chi, (R, 1))
        weights = np.ones(R)
        for r, combo in enumerate(block):
            for slot, (rep, count) in enumerate(combo):
                chi[r, free[slot]] = rep
                weights[r] *= count / m
        _, purchased = simulate_batch(
            net, products, seeds, chi, master_seed=0, rep_offset=evaluated, on_tie="raise"
        )
        for j in range(k):
            bought = purchased[:, real] == j
            spread[j] += float(np.dot(weights, bought.sum(axis=1)))
            node_prob[j, real] += weights @ bought
        evaluated += R
    return OracleResult(
        product_ids=aug.product_ids,
        spread=spread,
        node_probability=node_prob,
        tuples_evaluated=evaluated,
    )


@dataclass(frozen=True)
class BlockingDemoValues:
    """Closed-form quantities for the competitor-blocking demo fixture."""

    bridge_competitor_prob: float  # P(bridge node buys the competitor product)
    target_focal_prob: float  # P(contested target buys the focal product)
    focal_spread: float  # expected real-node purchasers of the focal product


def analytic_blocking_demo(variant: str = "base") -> BlockingDemoValues:
    """Hand-derived expectations for the 37-node blocking demo.

    The fixture (see fixtures.blocking_demo) has a bridge node fed 0.6 by the
    competitor seed and 0.4 by an optional extra focal seed, and a contested
    target fed 0.3 of focal influence and 0.7 from the bridge, with 30 sure
    followers behind the target.  In the base variant the extra seed is off:
    the bridge activates (buying the competitor product) iff chi <= 0.6, and
    the target buys focal iff the bridge stayed inactive and chi <= 0.3.
    With the extra seed on, the bridge sees aggregate norm sqrt(0.6^2+0.4^2)
    but still prefers the competitor, so it blocks the target more often.
    """
    if variant == "base":
        p_bridge = 0.6
        p_target = (1.0 - p_bridge) * 0.3
        focal_seeds = 1
    elif variant == "extra_seed":
        p_bridge = math.sqrt(0.6**2 + 0.4**2)
        p_target = (1.0 - p_bridge) * 0.3
        focal_seeds = 2
    else:
        raise ValueError(f"unknown variant {variant!r}")
    # seeds + two surely-influenced intermediates + the target and its 30 followers
    spread = focal_seeds + 2 + p_target * 31
    return BlockingDemoValues(p_bridge, p_target, spread)
