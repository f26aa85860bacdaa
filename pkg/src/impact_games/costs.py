"""Expected execution costs, revenue variance, and the mean-variance value.

Works for both the identical-agent and the heterogeneous game specs. All
reported costs are impact costs: the bookkeeping term (inventory times the
initial price) is omitted, which for deterministic strategies only shifts
every agent's cost by the same constant when the initial price is nonzero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import build_matrices

__all__ = [
    "expected_cost",
    "variance_and_mv",
    "cost_report",
    "CostReport",
    "stationarity_residual",
]


def _agent_params(spec):
    """Normalize either spec flavor to per-agent arrays.

    Returns (thetas, scales, priority, kernel, cross_impact). ``scales`` maps
    each agent's share volume to impact volume; for identical agents the
    crowding factor is folded into the kernel instead, so scales are one.
    """
    n_agents = spec.n_agents
    if hasattr(spec, "thetas"):  # heterogeneous spec
        return (
            np.asarray(spec.thetas, dtype=float),
            np.asarray(spec.scales, dtype=float),
            np.asarray(spec.priority, dtype=float),
            spec.kernel,
            spec.cross_impact,
        )
    priority = np.full((n_agents, n_agents), 0.5)
    np.fill_diagonal(priority, 0.0)
    return (
        np.full(n_agents, float(spec.theta)),
        np.ones(n_agents),
        priority,
        spec.effective_kernel,
        spec.cross_impact,
    )


def _check_strategies(spec, strategies) -> np.ndarray:
    strategies = np.asarray(strategies, dtype=float)
    expected = (spec.n_assets, spec.n_agents, spec.grid.n_points)
    if strategies.shape != expected:
        raise ValueError(f"strategies have shape {strategies.shape}, expected {expected}")
    return strategies


def expected_cost(spec, strategies, agent: int) -> float:
    """Expected execution cost of one agent given everybody's strategies.

    The cost is quadratic: half the kernel-matrix form of the agent's own
    impact volume, plus the quadratic fee, plus for every other agent the
    decayed cost of their earlier trades and the priority-weighted cost of
    their simultaneous trades. Per-agent impact scales multiply the share
    volumes wherever they hit the price, fee included.
    """
    strategies = _check_strategies(spec, strategies)
    thetas, scales, priority, kernel, q = _agent_params(spec)
    bundle = build_matrices(spec.grid, kernel)
    gram, lower, g0 = bundle.kernel_matrix, bundle.strict_lower, bundle.kernel_at_zero
    n = spec.grid.n_points

    own = scales[agent] * strategies[:, agent, :]
    cost = 0.5 * np.sum(q * (own @ gram @ own.T)) + thetas[agent] * np.sum(own**2)
    for other in range(spec.n_agents):
        if other == agent:
            continue
        cross = lower + priority[agent, other] * g0 * np.eye(n)
        theirs = scales[other] * strategies[:, other, :]
        cost += np.sum(q * (own @ cross @ theirs.T))
    return float(cost)


def variance_and_mv(spec, strategies, agent: int) -> tuple[float, float]:
    """Revenue variance and mean-variance value of one agent's strategy.

    For deterministic strategies under the Bachelier model the only random
    term is the unaffected-price revenue, whose variance couples trades at
    times ``t_k`` and ``t_h`` through the covariance at ``min(t_k, t_h)``.
    """
    strategies = _check_strategies(spec, strategies)
    _, scales, _, _, _ = _agent_params(spec)
    own = scales[agent] * strategies[:, agent, :]
    covariance = getattr(spec, "covariance", None)
    if covariance is None:
        variance = 0.0
    else:
        t = spec.grid.points
        earlier = np.minimum.outer(t, t)
        variance = float(np.sum(earlier * (own.T @ covariance @ own)))
    gamma = getattr(spec, "gamma", 0.0)
    mv = expected_cost(spec, strategies, agent) + 0.5 * gamma * variance
    return variance, mv


@dataclass(frozen=True)
class CostReport:
    """Per-agent expected cost, revenue variance, and mean-variance value."""

    expected: np.ndarray
    variance: np.ndarray
    mean_variance: np.ndarray


def cost_report(spec, strategies) -> CostReport:
    expected = np.empty(spec.n_agents)
    variance = np.empty(spec.n_agents)
    mv = np.empty(spec.n_agents)
    for j in range(spec.n_agents):
        expected[j] = expected_cost(spec, strategies, j)
        variance[j], mv[j] = variance_and_mv(spec, strategies, j)
    return CostReport(expected=expected, variance=variance, mean_variance=mv)


def stationarity_residual(spec, strategies, agent: int) -> float:
    """Max-norm of the projected gradient of the agent's objective.

    The gradient of the mean-variance value with respect to the agent's own
    strategy is projected onto the feasible directions (per-asset sums fixed,
    untradable coordinates dropped); at an equilibrium it vanishes.
    """
    strategies = _check_strategies(spec, strategies)
    thetas, scales, priority, kernel, q = _agent_params(spec)
    bundle = build_matrices(spec.grid, kernel)
    gram, lower, g0 = bundle.kernel_matrix, bundle.strict_lower, bundle.kernel_at_zero
    n = spec.grid.n_points

    own = scales[agent] * strategies[:, agent, :]
    grad = scales[agent] * (q @ own @ gram) + 2.0 * thetas[agent] * scales[agent] * own
    for other in range(spec.n_agents):
        if other == agent:
            continue
        cross = lower + priority[agent, other] * g0 * np.eye(n)
        grad += scales[agent] * scales[other] * (q @ strategies[:, other, :] @ cross.T)
    gamma = getattr(spec, "gamma", 0.0)
    covariance = getattr(spec, "covariance", None)
    if gamma > 0.0 and covariance is not None:
        t = spec.grid.points
        earlier = np.minimum.outer(t, t)
        grad += gamma * scales[agent] * (covariance @ own @ earlier)

    mask = getattr(spec, "mask", None)
    residual = 0.0
    for asset in range(spec.n_assets):
        if mask is not None and not mask[asset, agent]:
            continue
        centered = grad[asset] - grad[asset].mean()
        residual = max(residual, float(np.abs(centered).max()))
    return residual
