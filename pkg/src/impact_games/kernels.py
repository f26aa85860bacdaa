"""Trading grids, decay kernels, and the dense matrices built from them.

Every quadratic form used by the solvers is assembled here: the symmetric
kernel matrix, its strict lower part, the fair-priority and general-priority
cross-cost matrices, the quadratic-fee adjustment, the Bachelier variance
matrix, and the risk-adjusted self-cost matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "TimeGrid",
    "DecayKernel",
    "MatrixBundle",
    "make_equidistant_grid",
    "exponential_kernel",
    "power_law_kernel",
    "build_matrices",
]


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing trading times ``t_0 = 0 < t_1 < ... < t_N``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a trading grid needs at least two time points")
        if pts[0] != 0.0:
            raise ValueError("trading grids must start at t = 0")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("trading times must be strictly increasing")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n_steps(self) -> int:
        """Number of trading intervals (one less than the point count)."""
        return self.points.size - 1

    @property
    def n_points(self) -> int:
        return self.points.size

    @property
    def horizon(self) -> float:
        return float(self.points[-1])


def make_equidistant_grid(n_steps: int, horizon: float = 1.0) -> TimeGrid:
    """Equidistant grid with ``n_steps + 1`` points on ``[0, horizon]``.

    Parameters
    ----------
    n_steps : int
        Number of trading intervals, at least 1.
    horizon : float
        Length of the trading session, strictly positive.
    """
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError(f"n_steps must be a positive integer, got {n_steps!r}")
    if not horizon > 0.0:
        raise ValueError(f"horizon must be positive, got {horizon!r}")
    return TimeGrid(np.linspace(0.0, float(horizon), int(n_steps) + 1))


@dataclass(frozen=True)
class DecayKernel:
    """Nonincreasing, strictly positive impact decay kernel.

    Two families are supported:

    * ``"exponential"``: ``scale * exp(-rate * t)``
    * ``"power_law"``: ``scale * (t + offset) ** -exponent`` (the positive
      offset keeps the value at lag zero finite)

    ``scale`` is a uniform multiplier; crowding adjustments of the form
    ``n_agents ** -beta`` are folded into it via :meth:`scaled`.
    """

    family: str
    rate: float = 1.0
    exponent: float = 1.0
    offset: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in ("exponential", "power_law"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.scale > 0.0:
            raise ValueError("kernel scale must be positive")
        if self.family == "exponential" and not self.rate > 0.0:
            raise ValueError("exponential kernel needs a positive decay rate")
        if self.family == "power_law":
            if not self.exponent > 0.0:
                raise ValueError("power-law kernel needs a positive exponent")
            if not self.offset > 0.0:
                raise ValueError("power-law kernel needs a positive time offset")

    def __call__(self, lag):
        lag = np.asarray(lag, dtype=float)
        if self.family == "exponential":
            return self.scale * np.exp(-self.rate * lag)
        return self.scale * (lag + self.offset) ** (-self.exponent)

    @property
    def at_zero(self) -> float:
        """Kernel value at lag zero (instantaneous impact of a unit trade)."""
        return float(self(0.0))

    def scaled(self, factor: float) -> "DecayKernel":
        """Same kernel with the uniform scale multiplied by ``factor > 0``."""
        if not factor > 0.0:
            raise ValueError("kernel scale factor must be positive")
        return replace(self, scale=self.scale * factor)


def exponential_kernel(rate: float = 1.0, scale: float = 1.0) -> DecayKernel:
    return DecayKernel(family="exponential", rate=rate, scale=scale)


def power_law_kernel(exponent: float, offset: float, scale: float = 1.0) -> DecayKernel:
    return DecayKernel(family="power_law", exponent=exponent, offset=offset, scale=scale)


@dataclass(frozen=True)
class MatrixBundle:
    """All ``(N+1) x (N+1)`` matrices derived from one grid/kernel pair.

    Attributes
    ----------
    kernel_matrix : symmetric matrix of kernel values at absolute time lags.
    strict_lower : kernel values at positive lags, zero on and above the diagonal.
    fair_priority : strict_lower plus half the lag-zero value on the diagonal;
        the cross-cost matrix when simultaneous execution order is a fair coin.
    self_cost : kernel_matrix plus twice the quadratic fee on the diagonal.
    priority_cross : strict_lower plus ``priority_prob`` times the lag-zero
        value on the diagonal (cross cost when the counterparty executes
        first with that probability).
    price_variance : Bachelier variance matrix ``var_rate * min(t_i, t_j)``.
    mv_self_cost : self_cost plus risk aversion times price_variance; the
        system matrix of the mean-variance first-order conditions.
    """

    kernel_matrix: np.ndarray
    strict_lower: np.ndarray
    fair_priority: np.ndarray
    self_cost: np.ndarray
    priority_cross: np.ndarray
    price_variance: np.ndarray
    mv_self_cost: np.ndarray
    kernel_at_zero: float
    theta: float
    gamma: float
    priority_prob: float
    var_rate: float


def _validate_kernel_on_grid(kernel: DecayKernel, lags: np.ndarray) -> None:
    values = np.atleast_1d(kernel(lags))
    if np.any(values <= 0.0):
        raise ValueError("decay kernel must be strictly positive on the sampled lags")
    # allow for float noise on near-flat kernels
    if np.any(np.diff(values) > 1e-12 * values[0]):
        raise ValueError("decay kernel must be nonincreasing on the sampled lags")


def build_matrices(
    grid: TimeGrid,
    kernel: DecayKernel,
    theta: float = 0.0,
    gamma: float = 0.0,
    priority_prob: float = 0.5,
    var_rate: float = 0.0,
) -> MatrixBundle:
    """Assemble the matrix bundle for one asset.

    Parameters
    ----------
    grid, kernel : trading grid and decay kernel.
    theta : quadratic transaction-cost parameter, >= 0.
    gamma : risk-aversion parameter, >= 0.
    priority_prob : probability that the counterparty executes first at a
        shared trading time, in [0, 1]; 1/2 is the fair game.
    var_rate : variance per unit time of the unaffected price, >= 0.
    """
    if theta < 0.0:
        raise ValueError("theta must be nonnegative")
    if gamma < 0.0:
        raise ValueError("gamma must be nonnegative")
    if var_rate < 0.0:
        raise ValueError("var_rate must be nonnegative")
    if not 0.0 <= priority_prob <= 1.0:
        raise ValueError("priority_prob must lie in [0, 1]")

    t = grid.points
    lag = t[:, None] - t[None, :]
    _validate_kernel_on_grid(kernel, np.unique(np.abs(lag)))

    n = t.size
    eye = np.eye(n)
    g0 = kernel.at_zero
    strict_lower = np.where(lag > 0.0, kernel(np.where(lag > 0.0, lag, 0.0)), 0.0)
    # symmetric matrix from the exact same kernel evaluations
    kernel_matrix = strict_lower + strict_lower.T + g0 * eye
    fair_priority = strict_lower + 0.5 * g0 * eye
    self_cost = kernel_matrix + 2.0 * theta * eye
    priority_cross = strict_lower + priority_prob * g0 * eye
    price_variance = var_rate * np.minimum.outer(t, t)
    mv_self_cost = self_cost + gamma * price_variance
    return MatrixBundle(
        kernel_matrix=kernel_matrix,
        strict_lower=strict_lower,
        fair_priority=fair_priority,
        self_cost=self_cost,
        priority_cross=priority_cross,
        price_variance=price_variance,
        mv_self_cost=mv_self_cost,
        kernel_at_zero=g0,
        theta=float(theta),
        gamma=float(gamma),
        priority_prob=float(priority_prob),
        var_rate=float(var_rate),
    )
