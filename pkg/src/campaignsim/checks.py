"""Randomized verification suite for the recommendation relay construction.

The relay pseudonode for product p receives chi_w - eps from p's root and
eps from the watched source node.  Writing theta for the angle between p and
whatever the source bought, the relay's aggregate norm satisfies

    (chi_w - eps)^2 + eps^2 + 2 eps (chi_w - eps) cos(theta)  <=  chi_w^2

with equality exactly at theta = 0.  So the relay fires iff the source buys
exactly p.  This module checks both the inequality (pure arithmetic, theta
up to pi) and the built behaviour (actual diffusion; theta up to pi/2, the
widest angle two non-negative unit vectors can span), including the firing
time one step after the source.
"""

from __future__ import annotations

import math

import numpy as np

from .channels import ChannelPlan, GadgetParams, build_augmented
from .diffusion import apply_fixed_thresholds, run_diffusion
from .feature_space import Product, normalize_product
from .network import Network


def _behavioral_trial(chi_w: float, eps: float, theta: float, same_product: bool) -> tuple[bool, bool]:
    """Build a 2-node instance and report (relay fired, fired one step late)."""
    net = Network.from_edges(2, [(0, 1, 0.1)], similarities={(0, 1): 0.5})
    p = Product(id=0, features=(1.0, 0.0), null_index=1)
    q = normalize_product((math.cos(theta), math.sin(theta)), null_index=1, product_id=1)
    products = [p, q]
    source_product = 0 if same_product else 1
    plans = [
        ChannelPlan(product=0, seeds=frozenset({0}) if source_product == 0 else frozenset(), alpha=1.0, beta=(0.0,)),
        ChannelPlan(product=1, seeds=frozenset({0}) if source_product == 1 else frozenset(), alpha=0.0, beta=(0.0,)),
    ]
    aug = build_augmented(net, products, plans, gadget=GadgetParams(chi_w=chi_w, epsilon=eps))
    relay = aug.gadget_node(0, 0, 1)
    chi = np.full(aug.net.node_count, 0.99)
    apply_fixed_thresholds(aug.net, chi)
    out = run_diffusion(aug.net, products, aug.seed_assignment(), chi)
    fired = out.activation_time[relay] >= 0
    on_time = (not fired) or out.activation_time[relay] == 1  # source is a seed, active at 0
    return bool(fired), bool(on_time)


def gadget_property_check(trials: int, seed: int) -> dict:
    """Random sweep over (chi_w, eps, theta); returns counterexample counts."""
    rng = np.random.default_rng(seed)
    analytic_fail = 0
    behavioral_fail = 0
    latency_fail = 0
    for _ in range(trials):
        chi_w = rng.uniform(0.05, 0.95)
        eps = chi_w * rng.uniform(0.05, 0.95)
        same = bool(rng.random() < 0.5)
        a = chi_w - eps
        if same:
            # equality branch: the reduced difference 2 eps a (cos 0 - 1) is exactly 0
            diff = 2.0 * eps * a * (math.cos(0.0) - 1.0)
            if diff != 0.0:
                analytic_fail += 1
        else:
            theta = rng.uniform(0.01, math.pi)
            lhs = a * a + eps * eps + 2.0 * eps * a * math.cos(theta)
            if not lhs < chi_w * chi_w:
                analytic_fail += 1
        # the second product needs a direction of its own even when the source
        # buys the first one, else the relay's purchase would tie
        q_angle = rng.uniform(0.01, math.pi / 2)
        fired, on_time = _behavioral_trial(chi_w, eps, q_angle, same)
        if fired != same:
            behavioral_fail += 1
        if not on_time:
            latency_fail += 1
    return {
        "trials": trials,
        "analytic_counterexamples": analytic_fail,
        "behavioral_counterexamples": behavioral_fail,
        "latency_violations": latency_fail,
        "counterexamples": analytic_fail + behavioral_fail + latency_fail,
    }
