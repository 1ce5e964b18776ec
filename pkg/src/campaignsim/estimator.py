"""Monte Carlo spread estimation over augmented networks.

Replications are partitioned into fixed-size tiles; tile k draws its
thresholds from a counter-based stream keyed by (master seed, k), so the
values a given replication sees depend only on the master seed and its global
index.  Per-replication purchase counts are accumulated as exact integers and
tiles are reduced in index order, which makes every estimate bit-identical
for any worker count.

Spread counts real nodes only; pseudonodes are bookkeeping.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channels import AugmentedNetwork
from .diffusion import apply_fixed_thresholds, simulate_batch
from .feature_space import Product
from .rng import TILE_SIZE, tile_rng


@dataclass
class SpreadEstimate:
    product_ids: tuple[int, ...]
    means: np.ndarray  # (k,) expected real-node purchasers per product
    stderrs: np.ndarray  # (k,)
    replications: int
    spread_sums: np.ndarray  # (k,) int64, exact
    spread_sumsq: np.ndarray  # (k,) int64, exact
    node_counts: np.ndarray | None  # (k, n) int64 purchase counts, or None
    real_nodes: np.ndarray

    def mean_of(self, product_id: int) -> float:
        return float(self.means[self.product_ids.index(product_id)])

    def stderr_of(self, product_id: int) -> float:
        return float(self.stderrs[self.product_ids.index(product_id)])

    def node_probability(self, node: int, product_id: int) -> float:
        if self.node_counts is None:
            raise ValueError("estimate was run without node counts")
        j = self.product_ids.index(product_id)
        return float(self.node_counts[j, node]) / self.replications

    def to_dict(self) -> dict:
        return {
            "replications": self.replications,
            "products": [
                {
                    "product": pid,
                    "mean": float(self.means[j]),
                    "stderr": float(self.stderrs[j]),
                }
                for j, pid in enumerate(self.product_ids)
            ],
        }


def _tile_bounds(replications: int):
    for tile_idx in range(0, (replications + TILE_SIZE - 1) // TILE_SIZE):
        lo = tile_idx * TILE_SIZE
        yield tile_idx, min(TILE_SIZE, replications - lo)


_WORKER_CTX: dict = {}


def _init_worker(aug, products, seed, track_node, max_steps):
    _WORKER_CTX.update(aug=aug, products=products, seed=seed, track_node=track_node, max_steps=max_steps)


def _tile_task(args):
    tile_idx, tile_len = args
    return _run_tile(
        _WORKER_CTX["aug"],
        _WORKER_CTX["products"],
        _WORKER_CTX["seed"],
        tile_idx,
        tile_len,
        _WORKER_CTX["track_node"],
        _WORKER_CTX["max_steps"],
    )


def _run_tile(aug, products, seed, tile_idx, tile_len, track_node, max_steps):
    net = aug.net
    n = net.node_count
    k = len(products)
    chi = tile_rng(seed, tile_idx).random((TILE_SIZE, n))[:tile_len]
    apply_fixed_thresholds(net, chi)
    act_time, purchased = simulate_batch(
        net,
        products,
        aug.seed_assignment(),
        chi,
        master_seed=seed,
        rep_offset=tile_idx * TILE_SIZE,
        max_steps=max_steps,
    )
    real = net.real_nodes()
    sums = np.zeros(k, dtype=np.int64)
    sumsq = np.zeros(k, dtype=np.int64)
    node_counts = np.zeros((k, n), dtype=np.int64)
    for j in range(k):
        bought = purchased[:, real] == j  # (R, n_real)
        per_rep = bought.sum(axis=1).astype(np.int64)
        sums[j] = per_rep.sum()
        sumsq[j] = np.dot(per_rep, per_rep)
        node_counts[j, real] = bought.sum(axis=0)
    time_hist = None
    if track_node is not None:
        times = act_time[:, track_node]
        time_hist = np.bincount(times[times >= 0], minlength=max_steps + 1).astype(np.int64)
    return sums, sumsq, node_counts, time_hist


def _run_all_tiles(aug, products, replications, seed, workers, track_node, max_steps):
    if max_steps is None:
        max_steps = aug.net.node_count + aug.horizon + 2
    k = len(products)
    n = aug.net.node_count
    sums = np.zeros(k, dtype=np.int64)
    sumsq = np.zeros(k, dtype=np.int64)
    node_counts = np.zeros((k, n), dtype=np.int64)
    time_hist = np.zeros(max_steps + 1, dtype=np.int64)
    tiles = list(_tile_bounds(replications))
    if workers and workers > 1:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_worker,
            initargs=(aug, products, seed, track_node, max_steps),
        ) as pool:
            results = pool.map(_tile_task, tiles)
            for s, sq, nc, th in results:  # map preserves tile order
                sums += s
                sumsq += sq
                node_counts += nc
                if th is not None:
                    time_hist += th
    else:
        for tile_idx, tile_len in tiles:
            s, sq, nc, th = _run_tile(aug, products, seed, tile_idx, tile_len, track_node, max_steps)
            sums += s
            sumsq += sq
            node_counts += nc
            if th is not None:
                time_hist += th
    return sums, sumsq, node_counts, time_hist


def estimate_spread(
    aug: AugmentedNetwork,
    products: list[Product],
    replications: int,
    seed: int,
    *,
    workers: int = 1,
    collect_node_counts: bool = False,
    max_steps: int | None = None,
) -> SpreadEstimate:
    """Mean and standard error of per-product real-node purchase counts."""
    if replications < 1:
        raise ValueError("replications must be >= 1")
    sums, sumsq, node_counts, _ = _run_all_tiles(
        aug, products, replications, seed, workers, None, max_steps
    )
    R = replications
    means = sums / R
    if R > 1:
        var = (sumsq - sums.astype(float) ** 2 / R) / (R - 1)
        stderrs = np.sqrt(np.maximum(var, 0.0) / R)
    else:
        stderrs = np.zeros_like(means)
    return SpreadEstimate(
        product_ids=aug.product_ids,
        means=means,
        stderrs=stderrs,
        replications=R,
        spread_sums=sums,
        spread_sumsq=sumsq,
        node_counts=node_counts if collect_node_counts else None,
        real_nodes=aug.net.real_nodes(),
    )


def estimate_node_probability(
    aug: AugmentedNetwork,
    products: list[Product],
    node: int,
    product_id: int,
    replications: int,
    seed: int,
    *,
    workers: int = 1,
) -> float:
    """Probability that a node ends up purchasing the given product."""
    est = estimate_spread(
        aug, products, replications, seed, workers=workers, collect_node_counts=True
    )
    return est.node_probability(node, product_id)


def activation_time_histogram(
    aug: AugmentedNetwork,
    products: list[Product],
    node: int,
    replications: int,
    seed: int,
    *,
    workers: int = 1,
    max_steps: int | None = None,
) -> np.ndarray:
    """Counts of replications in which the node activated at each step.

    Index t holds the count for activation at exactly step t; replications
    where the node never activates are not counted anywhere.
    """
    _, _, _, time_hist = _run_all_tiles(
        aug, products, replications, seed, workers, node, max_steps
    )
    return time_hist
