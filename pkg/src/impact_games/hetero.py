"""Equilibria for heterogeneous risk-neutral games via stacked first-order conditions.

Heterogeneity covers per-agent quadratic fees, per-agent impact scales,
pairwise execution-priority probabilities, and per-agent tradable-asset
masks. The game is linear-quadratic, so the stationarity conditions of all
agents plus their inventory constraints form one dense linear system that is
solved directly; no best-response iteration is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._linalg import NumericError, guarded_solve
from .cross_impact import analyze_cross_impact
from .equilibrium import Equilibrium
from .kernels import DecayKernel, TimeGrid, build_matrices

__all__ = [
    "HeteroGameSpec",
    "KktSystem",
    "assemble_equilibrium_system",
    "solve_hetero_nash",
    "PayoffTable",
    "payoff_matrix",
]


@dataclass(frozen=True)
class HeteroGameSpec:
    """A risk-neutral market impact game with heterogeneous agents.

    Parameters
    ----------
    grid, kernel, cross_impact, inventories : as in :class:`GameSpec`.
    thetas : per-agent quadratic fee parameters, >= 0. The fee applies to the
        agent's impact volume (share volume times the agent's scale), which is
        what makes a reduced impact scale behave exactly like trading a
        proportionally smaller inventory.
    scales : per-agent impact scales, > 0. An agent's share volume is
        multiplied by its scale wherever it hits the price; crowding exponents
        per agent are expressed as ``n_agents ** -beta_j`` here.
    priority : (J, J) matrix, ``priority[j, l]`` is the probability that agent
        l executes before agent j at a shared trading time. Off-diagonal
        entries must pair up to one; 1/2 everywhere is the fair game. A scalar
        is broadcast to all pairs.
    mask : (M, J) boolean array of tradable assets; inventories must vanish on
        masked entries. Full mask when omitted.
    """

    grid: TimeGrid
    kernel: DecayKernel
    cross_impact: np.ndarray
    inventories: np.ndarray
    thetas: np.ndarray
    scales: Optional[np.ndarray] = None
    priority: float | np.ndarray = 0.5
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        q = np.asarray(self.cross_impact, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("cross_impact must be a square matrix")
        if np.abs(q - q.T).max() > 1e-10 * max(np.abs(q).max(), 1.0):
            raise ValueError("cross_impact must be symmetric")
        object.__setattr__(self, "cross_impact", q)

        inv = np.atleast_2d(np.asarray(self.inventories, dtype=float))
        if inv.shape[0] != q.shape[0]:
            raise ValueError("inventories must have one row per asset")
        object.__setattr__(self, "inventories", inv)
        n_agents = inv.shape[1]

        thetas = np.broadcast_to(np.asarray(self.thetas, dtype=float), (n_agents,)).copy()
        if np.any(thetas < 0.0):
            raise ValueError("per-agent fees must be nonnegative")
        object.__setattr__(self, "thetas", thetas)

        scales = self.scales if self.scales is not None else np.ones(n_agents)
        scales = np.broadcast_to(np.asarray(scales, dtype=float), (n_agents,)).copy()
        if np.any(scales <= 0.0):
            raise ValueError("per-agent impact scales must be positive")
        object.__setattr__(self, "scales", scales)

        prio = np.asarray(self.priority, dtype=float)
        if prio.ndim == 0:
            p = np.full((n_agents, n_agents), float(prio))
            np.fill_diagonal(p, 0.0)
            prio = p
        if prio.shape != (n_agents, n_agents):
            raise ValueError("priority must be scalar or a (J, J) matrix")
        if np.any(prio < 0.0) or np.any(prio > 1.0):
            raise ValueError("priority probabilities must lie in [0, 1]")
        off = ~np.eye(n_agents, dtype=bool)
        if n_agents > 1 and np.abs((prio + prio.T)[off] - 1.0).max() > 1e-12:
            raise ValueError("priority[j, l] + priority[l, j] must equal 1 for j != l")
        object.__setattr__(self, "priority", prio)

        mask = self.mask
        if mask is None:
            mask = np.ones(inv.shape, dtype=bool)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != inv.shape:
            raise ValueError("mask must have the same shape as the inventories")
        if np.any((inv != 0.0) & ~mask):
            raise ValueError("inventories must be zero on untradable assets")
        object.__setattr__(self, "mask", mask)

    @property
    def n_assets(self) -> int:
        return self.cross_impact.shape[0]

    @property
    def n_agents(self) -> int:
        return self.inventories.shape[1]


@dataclass(frozen=True)
class KktSystem:
    """Stacked stationarity-plus-constraint system of the heterogeneous game.

    Variables are every agent's strategy coordinates on its tradable assets,
    followed by one multiplier per (agent, tradable asset). ``strategy_rows``
    maps agent j to the list of (asset, slice-into-variables) pairs.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    strategy_rows: Tuple[Tuple[Tuple[int, slice], ...], ...]


def assemble_equilibrium_system(spec: HeteroGameSpec) -> KktSystem:
    """Build the dense linear system whose solution is the Nash equilibrium."""
    q = spec.cross_impact
    bundle = build_matrices(spec.grid, spec.kernel)
    gram, lower, g0 = bundle.kernel_matrix, bundle.strict_lower, bundle.kernel_at_zero
    n = spec.grid.n_points
    eye = np.eye(n)

    active = [np.flatnonzero(spec.mask[:, j]) for j in range(spec.n_agents)]
    offsets, size = [], 0
    for assets in active:
        offsets.append(size)
        size += assets.size * (n + 1)  # strategy coords plus one multiplier per asset

    matrix = np.zeros((size, size))
    rhs = np.zeros(size)
    strategy_rows: List[Tuple[Tuple[int, slice], ...]] = []
    for j in range(spec.n_agents):
        assets_j = active[j]
        start = offsets[j]
        block = assets_j.size * n
        s_j = spec.scales[j]
        self_block = s_j**2 * np.kron(q[np.ix_(assets_j, assets_j)], gram)
        self_block += 2.0 * spec.thetas[j] * s_j**2 * np.eye(block)
        matrix[start : start + block, start : start + block] = self_block
        rows = []
        for pos, asset in enumerate(assets_j):
            coords = slice(start + pos * n, start + (pos + 1) * n)
            rows.append((int(asset), coords))
            mult = start + block + pos
            matrix[coords, mult] = -1.0  # stationarity: gradient equals multiplier
            matrix[mult, coords] = 1.0  # constraint: orders sum to the inventory
            rhs[mult] = spec.inventories[asset, j]
        strategy_rows.append(tuple(rows))
        for l in range(spec.n_agents):
            if l == j:
                continue
            assets_l = active[l]
            if assets_l.size == 0:
                continue
            cross = lower + spec.priority[j, l] * g0 * eye
            coupling = s_j * spec.scales[l] * np.kron(q[np.ix_(assets_j, assets_l)], cross)
            matrix[start : start + block, offsets[l] : offsets[l] + assets_l.size * n] = coupling
    return KktSystem(matrix=matrix, rhs=rhs, strategy_rows=tuple(strategy_rows))


def solve_hetero_nash(spec: HeteroGameSpec) -> Equilibrium:
    """Solve the heterogeneous game; strategies are zero on masked assets."""
    system = assemble_equilibrium_system(spec)
    try:
        solution = guarded_solve(system.matrix, system.rhs)
    except NumericError as exc:
        raise NumericError(
            f"no unique equilibrium: stacked system is singular or near-singular ({exc})",
            exc.condition,
        ) from exc
    strategies = np.zeros((spec.n_assets, spec.n_agents, spec.grid.n_points))
    for j, rows in enumerate(system.strategy_rows):
        for asset, coords in rows:
            strategies[asset, j, :] = solution[coords]
    spectrum = analyze_cross_impact(spec.cross_impact)
    principal = np.einsum("im,mjk->ijk", spectrum.eigenvectors.T, strategies)
    return Equilibrium(
        strategies=strategies,
        principal_strategies=principal,
        spectrum=spectrum,
        fundamentals=None,
    )


@dataclass(frozen=True)
class PayoffTable:
    """Expected costs over all combinations of per-agent venue choices.

    ``costs[o_1, ..., o_J, j]`` is agent j's expected cost when each agent i
    trades with its ``o_i``-th mask option. ``equilibrium[o_1, ..., o_J]``
    flags the combinations no agent leaves unilaterally. Each agent's
    candidate strategy for a mask option comes from the game where all agents
    share that mask; the diagonal cells are therefore genuine equilibria and
    the off-diagonal cells cross those candidate strategies.
    """

    mask_options: Tuple[Tuple[np.ndarray, ...], ...]
    costs: np.ndarray
    equilibrium: np.ndarray


def payoff_matrix(
    base: HeteroGameSpec,
    mask_options: Sequence[Sequence[np.ndarray]],
    tol: float = 1e-12,
) -> PayoffTable:
    """Meta-game payoff table over per-agent tradable-asset choices.

    Parameters
    ----------
    base : the game every cell shares (fees, scales, priority, inventories).
    mask_options : for each agent, the list of candidate masks (length-M
        boolean vectors). Each distinct mask must admit the uniform game in
        which every agent is restricted to it.
    """
    from .costs import expected_cost  # local import, costs dispatches on spec type

    n_agents = base.n_agents
    if len(mask_options) != n_agents:
        raise ValueError("need one mask-option list per agent")
    options = tuple(
        tuple(np.asarray(mask, dtype=bool) for mask in per_agent) for per_agent in mask_options
    )
    for per_agent in options:
        for mask in per_agent:
            if mask.shape != (base.n_assets,):
                raise ValueError("each mask option must be a length-M vector")

    def uniform_game(mask: np.ndarray) -> np.ndarray:
        full = np.repeat(mask[:, None], n_agents, axis=1)
        spec = HeteroGameSpec(
            grid=base.grid,
            kernel=base.kernel,
            cross_impact=base.cross_impact,
            inventories=base.inventories,
            thetas=base.thetas,
            scales=base.scales,
            priority=base.priority,
            mask=full,
        )
        return solve_hetero_nash(spec).strategies

    candidate_cache: dict[bytes, np.ndarray] = {}
    candidates: List[List[np.ndarray]] = []
    for j, per_agent in enumerate(options):
        per_candidates = []
        for mask in per_agent:
            key = mask.tobytes()
            if key not in candidate_cache:
                candidate_cache[key] = uniform_game(mask)
            per_candidates.append(candidate_cache[key][:, j, :])
        candidates.append(per_candidates)

    shape = tuple(len(per_agent) for per_agent in options)
    costs = np.empty(shape + (n_agents,))
    for combo in product(*(range(k) for k in shape)):
        strategies = np.stack(
            [candidates[j][combo[j]] for j in range(n_agents)], axis=1
        )
        for j in range(n_agents):
            costs[combo + (j,)] = expected_cost(base, strategies, j)

    nash = np.zeros(shape, dtype=bool)
    for combo in product(*(range(k) for k in shape)):
        best = True
        for j in range(n_agents):
            here = costs[combo + (j,)]
            for alt in range(shape[j]):
                if alt == combo[j]:
                    continue
                other = combo[:j] + (alt,) + combo[j + 1 :]
                if costs[other + (j,)] < here - tol * max(abs(here), 1.0):
                    best = False
                    break
            if not best:
                break
        nash[combo] = best
    return PayoffTable(mask_options=options, costs=costs, equilibrium=nash)
