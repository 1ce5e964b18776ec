"""Budget allocation by cross-entropy search plus a best-response loop.

A candidate plan is sampled from independent Bernoulli inclusion
probabilities over seed nodes and truncated-at-zero normals for the
continuous alpha/beta budgets.  Seed sets whose cost alone exceeds the
budget are resampled (bounded retries); the continuous part is then scaled
down uniformly so the total cost never exceeds the budget.  Each iteration
keeps the top elite fraction by estimated focal spread, refits the sampling
distribution to the elites and smooths toward the previous parameters.  The
returned plan is the best ever evaluated, not the last distribution mode.

Everything is seeded: sample draws and inner Monte Carlo estimates use
sub-seeds derived from (master seed, iteration, sample), so repeated runs
return the identical plan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelPlan, PlanError, build_augmented
from .estimator import estimate_spread
from .feature_space import Product
from .network import Network
from .rng import derive_seed


class InfeasiblePlanError(Exception):
    pass


@dataclass(frozen=True)
class CostModel:
    seed_unit_cost: float = 1.0
    alpha_unit_cost: float = 1.0
    beta_unit_cost: float = 1.0

    def plan_cost(self, plan: ChannelPlan) -> float:
        return (
            self.seed_unit_cost * len(plan.seeds)
            + self.alpha_unit_cost * plan.alpha
            + self.beta_unit_cost * sum(plan.beta)
        )


def plan_cost(plan: ChannelPlan, cost_model: CostModel) -> float:
    return cost_model.plan_cost(plan)


@dataclass
class CEConfig:
    n_samples: int | None = None  # default max(100, 2 * candidate count)
    elite_frac: float = 0.1
    smoothing: float = 0.7  # weight on the freshly fitted parameters
    max_iterations: int = 30
    tol: float = 1e-3
    replications: int = 10_000
    seed_retry_limit: int = 100
    workers: int = 1
    best_response_tol: float = 1e-3


@dataclass
class CrossEntropyState:
    seed_probs: np.ndarray  # per candidate node
    alpha_mean: float
    alpha_std: float
    beta_mean: np.ndarray  # (horizon,)
    beta_std: np.ndarray
    iteration: int = 0


@dataclass
class CEResult:
    best_plan: ChannelPlan
    best_value: float
    trace: list[dict] = field(default_factory=list)
    state: CrossEntropyState | None = None
    evaluations: int = 0
    max_cost_evaluated: float = 0.0


def sample_plan(
    state: CrossEntropyState,
    cost_model: CostModel,
    gamma: float,
    horizon: int,
    product_id: int,
    candidates: list[int],
    rng: np.random.Generator,
    retry_limit: int = 100,
) -> ChannelPlan:
    """Draw one budget-feasible plan from the current sampling distribution."""
    seeds = None
    for _ in range(retry_limit):
        mask = rng.random(len(candidates)) < state.seed_probs
        cost = cost_model.seed_unit_cost * int(mask.sum())
        if cost <= gamma:
            seeds = frozenset(c for c, m in zip(candidates, mask) if m)
            break
    if seeds is None:
        raise InfeasiblePlanError(
            f"no feasible seed set within {retry_limit} draws for budget {gamma}"
        )
    alpha = max(0.0, float(rng.normal(state.alpha_mean, state.alpha_std)))
    beta = np.maximum(0.0, rng.normal(state.beta_mean, state.beta_std))
    seed_cost = cost_model.seed_unit_cost * len(seeds)
    cont = cost_model.alpha_unit_cost * alpha + cost_model.beta_unit_cost * float(beta.sum())
    if seed_cost + cont > gamma and cont > 0.0:
        factor = (gamma - seed_cost) / cont
        alpha *= factor
        beta *= factor
    return ChannelPlan(product=product_id, seeds=seeds, alpha=alpha, beta=tuple(beta))


def _initial_state(candidates, cost_model, gamma, horizon) -> CrossEntropyState:
    n = max(len(candidates), 1)
    if cost_model.seed_unit_cost > 0:
        p0 = min(0.5, max(0.01, gamma / cost_model.seed_unit_cost / n))
    else:
        p0 = 0.5
    scale = gamma / (horizon + 2) if gamma > 0 else 1.0
    a_mean = scale / cost_model.alpha_unit_cost if cost_model.alpha_unit_cost > 0 else 1.0
    b_mean = scale / cost_model.beta_unit_cost if cost_model.beta_unit_cost > 0 else 1.0
    a_mean = max(a_mean, 1e-3)
    b_mean = max(b_mean, 1e-3)
    return CrossEntropyState(
        seed_probs=np.full(len(candidates), p0),
        alpha_mean=a_mean,
        alpha_std=a_mean,
        beta_mean=np.full(horizon, b_mean),
        beta_std=np.full(horizon, b_mean),
    )


def _bernoulli_entropy(p: np.ndarray) -> float:
    q = np.clip(p, 1e-12, 1.0 - 1e-12)
    ent = -(q * np.log(q) + (1.0 - q) * np.log(1.0 - q))
    ent[(p <= 0.0) | (p >= 1.0)] = 0.0
    return float(ent.max()) if ent.size else 0.0


def ce_optimize(
    net: Network,
    products: list[Product],
    focal_product: int,
    competitor_plans: list[ChannelPlan],
    cost_model: CostModel,
    gamma: float,
    config: CEConfig,
    seed: int,
    *,
    horizon: int | None = None,
) -> CEResult:
    """Cross-entropy search for the focal product's plan against fixed rivals."""
    if gamma < 0:
        raise InfeasiblePlanError("budget must be >= 0")
    if horizon is None:
        if not competitor_plans:
            raise ValueError("horizon is required when there are no competitor plans")
        horizon = competitor_plans[0].horizon
    taken = set()
    for plan in competitor_plans:
        taken |= plan.seeds
    covered = {plan.product for plan in competitor_plans}
    if focal_product in covered:
        raise PlanError(f"competitor plans already cover product {focal_product}")
    # products without a stated rival plan sit out with an empty one
    fixed_plans = list(competitor_plans) + [
        ChannelPlan(product=p.id, seeds=frozenset(), alpha=0.0, beta=(0.0,) * horizon)
        for p in products
        if p.id != focal_product and p.id not in covered
    ]
    candidates = [int(v) for v in net.real_nodes() if v not in taken]
    n_samples = config.n_samples or max(100, 2 * len(candidates))
    n_elite = max(1, math.ceil(config.elite_frac * n_samples))
    lam = config.smoothing

    state = _initial_state(candidates, cost_model, gamma, horizon)
    best_plan = None
    best_value = -math.inf
    trace: list[dict] = []
    evaluations = 0
    max_cost = 0.0

    for it in range(1, config.max_iterations + 1):
        scored = []
        for s in range(n_samples):
            rng = np.random.default_rng(derive_seed(seed, it, s))
            plan = sample_plan(
                state, cost_model, gamma, horizon, focal_product, candidates, rng,
                retry_limit=config.seed_retry_limit,
            )
            aug = build_augmented(net, products, fixed_plans + [plan])
            est = estimate_spread(
                aug, products, config.replications, derive_seed(seed, 7000 + it, s),
                workers=config.workers,
            )
            value = est.mean_of(focal_product)
            scored.append((value, s, plan))
            evaluations += 1
            max_cost = max(max_cost, cost_model.plan_cost(plan))
            if value > best_value:
                best_value, best_plan = value, plan
        scored.sort(key=lambda t: (-t[0], t[1]))
        elite = scored[:n_elite]
        elite_threshold = elite[-1][0]

        freq = np.zeros(len(candidates))
        alphas = np.array([p.alpha for _, _, p in elite])
        betas = np.array([p.beta for _, _, p in elite])
        for _, _, plan in elite:
            for i, c in enumerate(candidates):
                if c in plan.seeds:
                    freq[i] += 1.0
        freq /= len(elite)
        new_probs = lam * freq + (1 - lam) * state.seed_probs
        new_a_mean = lam * float(alphas.mean()) + (1 - lam) * state.alpha_mean
        new_a_std = lam * float(alphas.std()) + (1 - lam) * state.alpha_std
        new_b_mean = lam * betas.mean(axis=0) + (1 - lam) * state.beta_mean
        new_b_std = lam * betas.std(axis=0) + (1 - lam) * state.beta_std

        delta = max(
            float(np.max(np.abs(new_probs - state.seed_probs), initial=0.0)),
            abs(new_a_mean - state.alpha_mean),
            abs(new_a_std - state.alpha_std),
            float(np.max(np.abs(new_b_mean - state.beta_mean), initial=0.0)),
            float(np.max(np.abs(new_b_std - state.beta_std), initial=0.0)),
        )
        state = CrossEntropyState(
            seed_probs=new_probs,
            alpha_mean=new_a_mean,
            alpha_std=new_a_std,
            beta_mean=new_b_mean,
            beta_std=new_b_std,
            iteration=it,
        )
        values = np.array([v for v, _, _ in scored])
        trace.append(
            {
                "iteration": it,
                "best_value": best_value,
                "iteration_best": float(values.max()),
                "iteration_mean": float(values.mean()),
                "elite_threshold": elite_threshold,
            }
        )
        spread_stat = _bernoulli_entropy(state.seed_probs) + state.alpha_std + float(state.beta_std.sum())
        if delta < config.tol or spread_stat < config.tol:
            break

    return CEResult(
        best_plan=best_plan,
        best_value=best_value,
        trace=trace,
        state=state,
        evaluations=evaluations,
        max_cost_evaluated=max_cost,
    )


@dataclass
class BestResponseResult:
    plans: list[ChannelPlan]
    values: list[float]
    history: list[dict] = field(default_factory=list)
    rounds_run: int = 0


def best_response_loop(
    net: Network,
    products: list[Product],
    cost_models: list[CostModel],
    budgets: list[float],
    rounds: int,
    config: CEConfig,
    seed: int,
    *,
    horizon: int,
) -> BestResponseResult:
    """Sequential round-robin: each product re-optimizes against the others.

    Stops early once a full round moves no product's objective by more than
    config.best_response_tol.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    k = len(products)
    if len(cost_models) != k or len(budgets) != k:
        raise ValueError("cost_models and budgets must match the product list")
    plans = [
        ChannelPlan(product=p.id, seeds=frozenset(), alpha=0.0, beta=(0.0,) * horizon)
        for p in products
    ]
    values: list[float | None] = [None] * k
    history: list[dict] = []
    rounds_run = 0
    for rnd in range(rounds):
        max_delta = math.inf if any(v is None for v in values) else 0.0
        for i, p in enumerate(products):
            competitors = [plans[j] for j in range(k) if j != i]
            res = ce_optimize(
                net, products, p.id, competitors, cost_models[i], budgets[i],
                config, derive_seed(seed, rnd, i), horizon=horizon,
            )
            if values[i] is not None:
                max_delta = max(max_delta, abs(res.best_value - values[i]))
            plans[i] = res.best_plan
            values[i] = res.best_value
        rounds_run = rnd + 1
        history.append({"round": rnd, "values": [float(v) for v in values]})
        if max_delta <= config.best_response_tol:
            break
    return BestResponseResult(plans=plans, values=[float(v) for v in values], history=history, rounds_run=rounds_run)
