"""Simulation and budget optimization for competing multi-channel campaigns.

Products diffuse over a weighted social network under a multi-feature
linear-threshold rule; mass-media and social-advertising channels are
compiled into pseudonode gadgets so one engine covers every channel mix.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .channels import (
    AugmentedNetwork,
    ChannelPlan,
    GadgetParams,
    PlanError,
    build_augmented,
    load_plans,
    save_plans,
    scaling_ratio,
)
from .diffusion import (
    DiffusionNotConverged,
    PurchaseTieError,
    SeedAssignment,
    run_diffusion,
    sample_thresholds,
    simulate_batch,
)
from .estimator import SpreadEstimate, estimate_node_probability, estimate_spread
from .feature_space import Product, ProductError, angular_distance, load_products, normalize_product
from .network import Edge, Network, NetworkError, ParseError, ValidationError, load_network
from .optimizer import (
    CEConfig,
    CostModel,
    InfeasiblePlanError,
    best_response_loop,
    ce_optimize,
    plan_cost,
)
from .oracle import EnumerationCapError, GridSpec, analytic_blocking_demo, exact_spread_grid

__all__ = [
    "AugmentedNetwork",
    "CEConfig",
    "ChannelPlan",
    "CostModel",
    "DiffusionNotConverged",
    "Edge",
    "EnumerationCapError",
    "GadgetParams",
    "GridSpec",
    "InfeasiblePlanError",
    "Network",
    "NetworkError",
    "ParseError",
    "PlanError",
    "Product",
    "ProductError",
    "PurchaseTieError",
    "SeedAssignment",
    "SpreadEstimate",
    "ValidationError",
    "analytic_blocking_demo",
    "angular_distance",
    "best_response_loop",
    "build_augmented",
    "ce_optimize",
    "estimate_node_probability",
    "estimate_spread",
    "exact_spread_grid",
    "load_network",
    "load_plans",
    "load_products",
    "normalize_product",
    "plan_cost",
    "run_diffusion",
    "sample_thresholds",
    "save_plans",
    "scaling_ratio",
    "simulate_batch",
    "__version__",
]
