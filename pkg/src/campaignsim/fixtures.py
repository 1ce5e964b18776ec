"""Built-in demonstration instances.

preference_shift: one contested node receiving staggered influence from two
camps; its aggregate starts near the first product and drifts toward the
second when the later wave arrives, without flipping the purchase.

blocking_demo: a 37-node instance in which a competitor-fed bridge node
usually blocks the focal product from a contested target with 30 followers.
The base variant seeds the focal product once; the extra_seed variant also
seeds the helper node feeding the bridge, which raises the bridge's
activation probability and lowers the focal spread even though the focal
side spent more.

ce_toy: a 5-node single-product instance small enough for exhaustive budget
search, used to benchmark the cross-entropy optimizer.
"""

from __future__ import annotations

import os

from .channels import ChannelPlan, save_plans
from .feature_space import Product, save_products
from .network import Edge, Network, save_network

BLOCKING_FOLLOWERS = 30


def preference_shift():
    """Two seeds, two relays, one contested node (weights 0.4/0.2/0.1/0.2).

    The contested node hears 0.4/0.2 at step 1 and 0.5/0.4 once the relays
    fire; both aggregates prefer product 0, the second less decisively.
    """
    edges = [
        Edge(0, 2, 1.0),
        Edge(1, 3, 1.0),
        Edge(0, 4, 0.4),
        Edge(1, 4, 0.2),
        Edge(2, 4, 0.1),
        Edge(3, 4, 0.2),
    ]
    net = Network.from_edges(5, edges)
    products = [
        Product(id=0, features=(1.0, 0.0), null_index=1),
        Product(id=1, features=(0.0, 1.0), null_index=0),
    ]
    plans = [
        ChannelPlan(product=0, seeds=frozenset({0}), alpha=0.0, beta=(0.0, 0.0)),
        ChannelPlan(product=1, seeds=frozenset({1}), alpha=0.0, beta=(0.0, 0.0)),
    ]
    return net, products, plans


# blocking_demo node layout
FOCAL_SEED = 0
COMPETITOR_SEED = 1
HELPER = 2  # extra focal seed in the extra_seed variant; isolated otherwise
BRIDGE = 3
TARGET = 4
SURE_A = 5
SURE_B = 6
FIRST_FOLLOWER = 7


def blocking_demo(variant: str = "base"):
    """The 37-node blocking instance; variant selects the focal seed set."""
    edges = [
        Edge(FOCAL_SEED, SURE_A, 1.0),
        Edge(FOCAL_SEED, SURE_B, 1.0),
        Edge(SURE_B, TARGET, 0.3),
        Edge(COMPETITOR_SEED, BRIDGE, 0.6),
        Edge(HELPER, BRIDGE, 0.4),
        Edge(BRIDGE, TARGET, 0.7),
    ]
    for i in range(BLOCKING_FOLLOWERS):
        edges.append(Edge(TARGET, FIRST_FOLLOWER + i, 1.0))
    net = Network.from_edges(FIRST_FOLLOWER + BLOCKING_FOLLOWERS, edges)
    products = [
        Product(id=0, features=(1.0, 0.0), null_index=1),
        Product(id=1, features=(0.0, 1.0), null_index=0),
    ]
    if variant == "base":
        focal_seeds = frozenset({FOCAL_SEED})
    elif variant == "extra_seed":
        focal_seeds = frozenset({FOCAL_SEED, HELPER})
    else:
        raise ValueError(f"unknown variant {variant!r}")
    plans = [
        ChannelPlan(product=0, seeds=focal_seeds, alpha=0.0, beta=(0.0, 0.0)),
        ChannelPlan(product=1, seeds=frozenset({COMPETITOR_SEED}), alpha=0.0, beta=(0.0, 0.0)),
    ]
    return net, products, plans


def ce_toy():
    """5-node single-product instance for exhaustive-vs-CE benchmarking.

    Returns (net, products, horizon); budget grids and cost models are the
    caller's business.
    """
    edges = [
        Edge(0, 1, 0.5),
        Edge(1, 2, 0.6),
        Edge(3, 4, 0.55),
        Edge(0, 4, 0.3),
    ]
    net = Network.from_edges(5, edges, similarities={(0, 1): 0.8})
    products = [Product(id=0, features=(0.6, 0.8), null_index=1)]
    return net, products, 2


def write_fixtures(out_dir: str) -> list[str]:
    """Write the demo instances as loadable files; returns the paths written."""
    written = []

    def emit(subdir, net, products, plan_files):
        d = os.path.join(out_dir, subdir)
        os.makedirs(d, exist_ok=True)
        edge_path = os.path.join(d, "edges.txt")
        sim_path = os.path.join(d, "similarity.txt")
        save_network(net, edge_path, sim_path)
        prod_path = os.path.join(d, "products.txt")
        save_products(products, prod_path)
        written.extend([edge_path, sim_path, prod_path])
        for name, plans in plan_files.items():
            p = os.path.join(d, name)
            save_plans(plans, p)
            written.append(p)

    net, products, plans = preference_shift()
    emit("preference_shift", net, products, {"plans.json": plans})

    net, products, plans = blocking_demo("base")
    _, _, plans_extra = blocking_demo("extra_seed")
    emit("blocking_demo", net, products, {"plans.json": plans, "plans_extra_seed.json": plans_extra})
    return written
