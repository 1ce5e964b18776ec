"""Marketing channels compiled onto the network as pseudonode gadgets.

A channel plan per product carries direct seeds, a social-advertising rate
alpha, and a mass-media schedule beta over a shared horizon.  Augmentation
adds, per product, a root pseudonode (the campaign source, seeded at step 0)
and a chain of media pseudonodes linked by weight-1 edges so that the t-th
chain node is influenced at step t-1.  Media reach is a pseudoedge from the
t-th chain node to each real node; social advertising adds one relay
pseudonode per (directed edge, product) that fires only when the edge's
source buys exactly that product, then recommends it to the target two steps
after the source activates.

Channel pseudoedge weights into a real node are scaled by a common ratio so
that they exactly fill the node's residual incoming capacity 1 - sum(b_uv):

    ratio(v) = (1 - sum_u b_uv) / sum_p (alpha_p * sum_u h_uv + sum_t beta_p[t])

with ratio 0 when the denominator is 0.  Relay activation relies on the
non-strict threshold comparison: with incoming weights (chi_w - eps) from the
root and eps from the source, a source buying the same product lands the
relay's aggregate norm exactly on its threshold.  To keep that equality exact
in floating point for any parameters, the relay's stored threshold is the
float sum of its two incoming weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .diffusion import SeedAssignment
from .feature_space import Product
from .network import Edge, Network, NodeKind, ValidationError


class PlanError(Exception):
    pass


@dataclass(frozen=True)
class ChannelPlan:
    product: int  # product id
    seeds: frozenset[int] = frozenset()
    alpha: float = 0.0
    beta: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "seeds", frozenset(int(s) for s in self.seeds))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if self.alpha < 0:
            raise PlanError(f"plan for product {self.product}: alpha < 0")
        if any(b < 0 for b in self.beta):
            raise PlanError(f"plan for product {self.product}: negative beta entry")

    @property
    def horizon(self) -> int:
        return len(self.beta)


@dataclass(frozen=True)
class GadgetParams:
    """Relay pseudonode geometry; requires 0 < epsilon < chi_w <= 1."""

    chi_w: float = 0.5
    epsilon: float = 0.25

    def __post_init__(self):
        if not (0.0 < self.epsilon < self.chi_w <= 1.0):
            raise PlanError(f"invalid gadget parameters chi_w={self.chi_w}, epsilon={self.epsilon}")


@dataclass
class AugmentedNetwork:
    net: Network
    base_node_count: int
    plans: tuple[ChannelPlan, ...]  # aligned with the products list
    product_ids: tuple[int, ...]
    roots: tuple[int, ...]  # root pseudonode per product index
    provenance: dict[int, dict]  # pseudonode id -> role description
    scale: np.ndarray  # per-base-node channel scaling ratio

    @property
    def horizon(self) -> int:
        return self.plans[0].horizon if self.plans else 0

    def seed_assignment(self) -> SeedAssignment:
        by_product = tuple(
            frozenset(plan.seeds) | {self.roots[i]} for i, plan in enumerate(self.plans)
        )
        return SeedAssignment(by_product)

    def chain_node(self, product_index: int, t: int) -> int:
        """The media pseudonode influenced at step t-1 (t=1 is the root)."""
        if t == 1:
            return self.roots[product_index]
        pid = self.product_ids[product_index]
        for node, info in self.provenance.items():
            if info["kind"] == "media_chain" and info["product"] == pid and info["step"] == t:
                return node
        raise KeyError(f"no media chain node for product {pid} at step {t}")

    def gadget_node(self, product_index: int, u: int, v: int) -> int | None:
        pid = self.product_ids[product_index]
        for node, info in self.provenance.items():
            if info["kind"] == "social_gadget" and info["product"] == pid and info["edge"] == (u, v):
                return node
        return None


def scaling_ratio(net: Network, v: int, plans: list[ChannelPlan]) -> float:
    """Residual incoming capacity of v divided by its total nominal channel load."""
    in_sum = sum(w for _, w in net.in_neighbors(v))
    denom = 0.0
    for plan in plans:
        h_total = sum(net.similarity_of(u, v) for u, _ in net.in_neighbors(v))
        denom += plan.alpha * h_total + sum(plan.beta)
    if denom <= 0.0:
        return 0.0
    return max(0.0, 1.0 - in_sum) / denom


class AugmentBuilder:
    """Accumulates pseudonodes and pseudoedges on top of a base network."""

    def __init__(self, net: Network, roots: dict[int, int]):
        self.base = net
        self.edges: list[Edge] = list(net.edges)
        self.kinds: list[int] = list(net.node_kind)
        self.fixed: list[float] = list(net.fixed_threshold)
        self.provenance: dict[int, dict] = {}
        self.roots = roots  # product index -> root node id
        self.chain: dict[tuple[int, int], int] = {}  # (product index, t) -> node

    def add_pseudo(self, kind: NodeKind, threshold: float, info: dict) -> int:
        node = len(self.kinds)
        self.kinds.append(int(kind))
        self.fixed.append(threshold)
        self.provenance[node] = info
        return node

    def chain_node(self, product_index: int, pid: int, t: int) -> int:
        """Return the media chain node for step t, materializing the chain lazily."""
        if t == 1:
            return self.roots[product_index]
        key = (product_index, t)
        if key not in self.chain:
            prev = self.chain_node(product_index, pid, t - 1)
            node = self.add_pseudo(
                NodeKind.MEDIA_CHAIN, 0.5, {"kind": "media_chain", "product": pid, "step": t}
            )
            self.edges.append(Edge(prev, node, 1.0))
            self.chain[key] = node
        return self.chain[key]

    def attach_mass_media(self, product_index: int, pid: int, plan: ChannelPlan, v: int, ratio: float) -> None:
        """Pseudoedges from the media chain to v, one per nonzero schedule entry."""
        for t_idx, beta_t in enumerate(plan.beta):
            w = ratio * beta_t
            if w <= 0.0:
                continue
            src = self.chain_node(product_index, pid, t_idx + 1)
            self.edges.append(Edge(src, v, w))

    def attach_social_gadget(
        self,
        product_index: int,
        pid: int,
        plan: ChannelPlan,
        u: int,
        v: int,
        similarity: float,
        ratio: float,
        params: GadgetParams,
    ) -> None:
        """Relay pseudonode for edge (u, v): fires iff u buys this product."""
        w_rec = ratio * plan.alpha * similarity
        if w_rec <= 0.0:
            return
        b_root = params.chi_w - params.epsilon
        # stored threshold equals the float sum of the incoming weights so the
        # same-product case lands exactly on the equality branch of >=
        threshold = b_root + params.epsilon
        node = self.add_pseudo(
            NodeKind.SOCIAL_GADGET,
            threshold,
            {"kind": "social_gadget", "product": pid, "edge": (u, v)},
        )
        root = self.roots[product_index]
        self.edges.append(Edge(root, node, b_root))
        self.edges.append(Edge(u, node, params.epsilon))
        self.edges.append(Edge(node, v, w_rec))


def build_augmented(
    net: Network,
    products: list[Product],
    plans: list[ChannelPlan],
    gadget: GadgetParams = GadgetParams(),
) -> AugmentedNetwork:
    """Compile channel plans into pseudonodes over a validated base network."""
    if np.any(net.node_kind != NodeKind.REAL):
        raise PlanError("base network already contains pseudonodes")
    by_id = {plan.product: plan for plan in plans}
    if len(by_id) != len(plans):
        raise PlanError("more than one plan for the same product")
    ordered = []
    for p in products:
        if p.id not in by_id:
            raise PlanError(f"no channel plan for product {p.id}")
        ordered.append(by_id[p.id])
    if len(by_id) != len(products):
        raise PlanError("plan references an unknown product")
    horizons = {plan.horizon for plan in ordered}
    if len(horizons) > 1:
        raise PlanError("plans must share one horizon")

    seen_seeds: set[int] = set()
    for plan in ordered:
        for s in plan.seeds:
            if not (0 <= s < net.node_count):
                raise PlanError(f"seed {s} is not a node of the base network")
            if s in seen_seeds:
                raise PlanError(f"node {s} seeded for more than one product")
            seen_seeds.add(s)

    roots: dict[int, int] = {}
    builder = AugmentBuilder(net, roots)
    for i, p in enumerate(products):
        roots[i] = builder.add_pseudo(
            NodeKind.PRODUCT_ROOT, 0.5, {"kind": "product_root", "product": p.id}
        )

    scale = np.zeros(net.node_count)
    for v in range(net.node_count):
        scale[v] = scaling_ratio(net, v, ordered)
        if scale[v] <= 0.0:
            continue
        for i, p in enumerate(products):
            builder.attach_mass_media(i, p.id, ordered[i], v, scale[v])
    for e in net.edges:
        h = net.similarity_of(e.src, e.dst)
        if h <= 0.0:
            continue
        if scale[e.dst] <= 0.0:
            continue
        for i, p in enumerate(products):
            builder.attach_social_gadget(i, p.id, ordered[i], e.src, e.dst, h, scale[e.dst], gadget)

    aug_net = Network(
        node_count=len(builder.kinds),
        edges=builder.edges,
        similarity=dict(net.similarity),
        node_kind=np.array(builder.kinds, dtype=np.int8),
        fixed_threshold=np.array(builder.fixed, dtype=float),
    )
    violations = aug_net.validate()
    if violations:
        raise ValidationError(violations)
    return AugmentedNetwork(
        net=aug_net,
        base_node_count=net.node_count,
        plans=tuple(ordered),
        product_ids=tuple(p.id for p in products),
        roots=tuple(roots[i] for i in range(len(products))),
        provenance=builder.provenance,
        scale=scale,
    )


def load_plans(path: str) -> list[ChannelPlan]:
    """Read a JSON plan file: {"horizon": T, "plans": [{product, seeds, alpha, beta}]}."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    horizon = int(payload["horizon"])
    plans = []
    for entry in payload["plans"]:
        beta = tuple(float(b) for b in entry.get("beta", []))
        if len(beta) != horizon:
            raise PlanError(f"plan for product {entry.get('product')}: beta length != horizon")
        plans.append(
            ChannelPlan(
                product=int(entry["product"]),
                seeds=frozenset(int(s) for s in entry.get("seeds", [])),
                alpha=float(entry.get("alpha", 0.0)),
                beta=beta,
            )
        )
    if not plans:
        raise PlanError(f"{path}: no plans")
    return plans


def plans_to_payload(plans: list[ChannelPlan]) -> dict:
    horizons = {p.horizon for p in plans}
    if len(horizons) != 1:
        raise PlanError("plans must share one horizon")
    return {
        "horizon": plans[0].horizon,
        "plans": [
            {
                "product": p.product,
                "seeds": sorted(p.seeds),
                "alpha": p.alpha,
                "beta": list(p.beta),
            }
            for p in plans
        ],
    }


def save_plans(plans: list[ChannelPlan], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plans_to_payload(plans), fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_augmented(aug: AugmentedNetwork, edge_path: str, similarity_path: str, pseudo_path: str) -> None:
    """Write the augmented graph plus a JSON sidecar mapping pseudonodes to roles."""
    from .network import save_network

    save_network(aug.net, edge_path, similarity_path)
    entries = {}
    for node, info in sorted(aug.provenance.items()):
        entry = dict(info)
        if "edge" in entry:
            entry["edge"] = list(entry["edge"])
        entry["fixed_threshold"] = float(aug.net.fixed_threshold[node])
        entries[str(node)] = entry
    payload = {
        "base_node_count": aug.base_node_count,
        "pseudonodes": entries,
    }
    with open(pseudo_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
