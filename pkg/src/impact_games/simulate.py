"""Price-path simulation under the Bachelier model with transient impact.

The unaffected price is an arithmetic random walk on a fine grid refining the
trading grid; the affected price adds the deterministic impact drift of the
aggregate order flow. Impact is strictly causal: the trade at time t_k moves
prices only after t_k.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

GENERATOR_ID = "numpy-default_rng(PCG64)-standard_normal"

__all__ = ["PricePath", "simulate_price", "write_price_csv", "impact_drift"]


@dataclass(frozen=True)
class PricePath:
    """Simulated unaffected/affected paths and the impact drift.

    Arrays have one row per fine-grid time and one column per asset;
    ``affected = unaffected + drift`` holds at every time. ``generator``
    records the random source so runs can be reproduced elsewhere.
    """

    times: np.ndarray
    unaffected: np.ndarray
    affected: np.ndarray
    drift: np.ndarray
    seed: int
    generator: str = GENERATOR_ID


def _fine_grid(trading_times: np.ndarray, fine_steps: int, horizon: float) -> np.ndarray:
    if fine_steps < 1:
        raise ValueError("fine_steps must be at least 1")
    segments = [np.array([trading_times[0]])]
    for left, right in zip(trading_times[:-1], trading_times[1:]):
        segments.append(np.linspace(left, right, fine_steps + 1)[1:])
    fine = np.concatenate(segments)
    if horizon < trading_times[-1]:
        raise ValueError("horizon must cover the whole trading session")
    if horizon > trading_times[-1]:
        step = (trading_times[-1] - trading_times[0]) / (len(trading_times) - 1) / fine_steps
        extra = np.arange(trading_times[-1] + step, horizon + 0.5 * step, step)
        if extra.size:
            fine = np.concatenate([fine, np.minimum(extra, horizon)])
    return fine


def _covariance_root(covariance: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(covariance)
    if lam.min() < -1e-10 * max(abs(lam).max(), 1.0):
        raise ValueError("covariance must be positive semidefinite")
    return vec * np.sqrt(np.clip(lam, 0.0, None))


def _scaled_aggregate_flow(spec, strategies: np.ndarray) -> np.ndarray:
    """Aggregate impact volume per (asset, time): per-agent scales applied."""
    scales = getattr(spec, "scales", None)
    if scales is None:
        return strategies.sum(axis=1)
    return np.einsum("j,ijk->ik", np.asarray(scales, dtype=float), strategies)


def impact_drift(spec, strategies: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Deterministic price displacement of the aggregate flow at given times.

    ``drift(t) = -sum over trades before t of kernel(t - t_k) times the
    cross-impact image of the aggregate impact volume at t_k``. Strictly
    before: the trade at t contributes nothing at t itself.
    """
    kernel = spec.effective_kernel if hasattr(spec, "effective_kernel") else spec.kernel
    flow = spec.cross_impact @ _scaled_aggregate_flow(spec, np.asarray(strategies, dtype=float))
    lag = np.asarray(times, dtype=float)[:, None] - spec.grid.points[None, :]
    weights = np.where(lag > 0.0, kernel(np.where(lag > 0.0, lag, 0.0)), 0.0)
    return -(weights @ flow.T)


def simulate_price(
    spec,
    strategies: np.ndarray,
    initial_prices,
    fine_steps: int = 10,
    horizon: Optional[float] = None,
    seed: int = 0,
    covariance=None,
) -> PricePath:
    """Simulate unaffected and affected price paths for one strategy profile.

    Parameters
    ----------
    spec : identical-agent or heterogeneous game spec.
    strategies : (M, J, N+1) strategy array (typically an equilibrium).
    initial_prices : scalar or length-M vector of starting prices.
    fine_steps : sub-intervals per trading interval (the fine grid always
        contains every trading time by construction).
    horizon : final simulation time, at least the trading horizon; the grid
        is extended past the session with the same resolution.
    seed : seed for the random generator; identical seeds give identical paths.
    covariance : covariance rate of the unaffected price. A scalar is taken
        as a per-asset variance rate; defaults to the spec's covariance, or
        zero if the spec has none.
    """
    strategies = np.asarray(strategies, dtype=float)
    n_assets = spec.n_assets
    if strategies.shape != (n_assets, spec.n_agents, spec.grid.n_points):
        raise ValueError("strategies do not match the spec dimensions")

    if covariance is None:
        covariance = getattr(spec, "covariance", None)
    if covariance is None:
        covariance = np.zeros((n_assets, n_assets))
    covariance = np.asarray(covariance, dtype=float)
    if covariance.ndim == 0:
        covariance = float(covariance) * np.eye(n_assets)
    if covariance.shape != (n_assets, n_assets):
        raise ValueError("covariance must be a scalar or an (M, M) matrix")

    start = np.broadcast_to(np.asarray(initial_prices, dtype=float), (n_assets,))
    if horizon is None:
        horizon = spec.grid.horizon
    times = _fine_grid(spec.grid.points, int(fine_steps), float(horizon))

    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((times.size - 1, n_assets))
    root = _covariance_root(covariance)
    increments = (draws @ root.T) * np.sqrt(np.diff(times))[:, None]
    unaffected = np.empty((times.size, n_assets))
    unaffected[0] = start
    np.cumsum(increments, axis=0, out=unaffected[1:])
    unaffected[1:] += start

    drift = impact_drift(spec, strategies, times)
    return PricePath(
        times=times,
        unaffected=unaffected,
        affected=unaffected + drift,
        drift=drift,
        seed=int(seed),
    )


def write_price_csv(path: PricePath, filename) -> None:
    """Write the path as CSV: time, then per-asset unaffected/affected/drift."""
    n_assets = path.unaffected.shape[1]
    header = ["time"]
    for name in ("unaffected", "affected", "drift"):
        header.extend(f"{name}_{i + 1}" for i in range(n_assets))
    with open(filename, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in range(path.times.size):
            values = [path.times[row], *path.unaffected[row], *path.affected[row], *path.drift[row]]
            writer.writerow(f"{value:.12g}" for value in values)
