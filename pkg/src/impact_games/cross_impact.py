"""Cross-impact matrix families and their spectral analysis.

The structured families (one-factor, rank-one, block) all have unit diagonal;
the spectrum of the cross-impact matrix determines the kernels of the
principal (eigenvector-rotated) assets and, through its top eigenvalue, the
stability threshold of the market.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "one_factor_matrix",
    "rank_one_matrix",
    "block_matrix",
    "explicit_matrix",
    "build_cross_impact",
    "SpectralReport",
    "analyze_cross_impact",
]

_SYM_TOL = 1e-10


def one_factor_matrix(n_assets: int, coupling: float) -> np.ndarray:
    """Unit diagonal with constant off-diagonal ``coupling`` in (0, 1).

    The bounds keep the matrix positive definite for any size.
    """
    if n_assets < 1:
        raise ValueError("n_assets must be at least 1")
    if not 0.0 < coupling < 1.0:
        raise ValueError(f"one-factor coupling must lie in (0, 1), got {coupling!r}")
    q = np.full((n_assets, n_assets), float(coupling))
    np.fill_diagonal(q, 1.0)
    return q


def rank_one_matrix(loadings: Sequence[float]) -> np.ndarray:
    """``diag(1 - b_i**2) + b b^T`` for factor loadings with ``|b_i| < 1``.

    The diagonal compensation keeps every self-impact coefficient equal to 1.
    """
    b = np.asarray(loadings, dtype=float)
    if b.ndim != 1 or b.size < 1:
        raise ValueError("loadings must be a nonempty vector")
    if np.any(np.abs(b) >= 1.0):
        raise ValueError("all factor loadings must satisfy |b_i| < 1")
    return np.diag(1.0 - b**2) + np.outer(b, b)


def block_matrix(sizes: Sequence[int], intra: Sequence[float], inter: float) -> np.ndarray:
    """Sector-block matrix: coupling ``intra[i]`` inside block i, ``inter`` across.

    Requires ``0 <= inter < intra[i] < 1`` for every block.
    """
    sizes = [int(s) for s in sizes]
    intra = [float(q) for q in intra]
    if len(sizes) != len(intra):
        raise ValueError("need one intra-block coupling per block")
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError("block sizes must be positive integers")
    if not 0.0 <= inter:
        raise ValueError("inter-block coupling must be nonnegative")
    if any(not inter < qi < 1.0 for qi in intra):
        raise ValueError("couplings must satisfy 0 <= inter < intra_i < 1")
    total = sum(sizes)
    q = np.full((total, total), float(inter))
    start = 0
    for size, qi in zip(sizes, intra):
        q[start : start + size, start : start + size] = qi
        start += size
    np.fill_diagonal(q, 1.0)
    return q


def explicit_matrix(matrix) -> np.ndarray:
    """Validate a user-supplied symmetric cross-impact matrix."""
    q = np.asarray(matrix, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError(f"cross-impact matrix must be square, got shape {q.shape}")
    scale = max(np.abs(q).max(), 1.0)
    if np.abs(q - q.T).max() > _SYM_TOL * scale:
        raise ValueError("cross-impact matrix must be symmetric")
    return 0.5 * (q + q.T)


def build_cross_impact(family: str, **params) -> np.ndarray:
    """Dispatcher used by config-driven entry points.

    Families: ``identity`` (size), ``one_factor`` (n_assets, coupling),
    ``rank_one`` (loadings), ``block`` (sizes, intra, inter),
    ``explicit`` (matrix).
    """
    builders = {
        "identity": lambda size: np.eye(int(size)),
        "one_factor": one_factor_matrix,
        "rank_one": rank_one_matrix,
        "block": block_matrix,
        "explicit": explicit_matrix,
    }
    if family not in builders:
        raise ValueError(f"unknown cross-impact family {family!r}")
    return builders[family](**params)


@dataclass(frozen=True)
class SpectralReport:
    """Eigendecomposition of a cross-impact matrix.

    ``eigenvalues`` are sorted descending and ``eigenvectors[:, i]`` is the
    orthonormal eigenvector for ``eigenvalues[i]``. ``one_factor_bound`` is
    ``1 + 2 h / M`` where h is the upper-triangular off-diagonal sum: for any
    unit-diagonal matrix with that off-diagonal mass, the top eigenvalue is at
    least this bound, with equality for the one-factor member.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    top_eigenvalue: float
    commutes_with_covariance: Optional[bool]
    one_factor_bound: float


def analyze_cross_impact(
    cross_impact: np.ndarray,
    covariance: Optional[np.ndarray] = None,
    tol: float = 1e-9,
    off_diagonal_sum: Optional[float] = None,
) -> SpectralReport:
    """Spectral report for a symmetric cross-impact matrix.

    Parameters
    ----------
    cross_impact : symmetric (M, M) matrix.
    covariance : optional symmetric (M, M) matrix; when given, the report
        records whether the two matrices commute within ``tol`` (relative to
        the product of their norms).
    tol : relative tolerance for the commutation test.
    off_diagonal_sum : upper-triangular off-diagonal sum used for the
        one-factor bound; computed from the matrix when omitted.
    """
    q = explicit_matrix(cross_impact)
    m = q.shape[0]
    try:
        lam, vec = np.linalg.eigh(q)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"eigendecomposition failed: {exc}") from exc
    # descending eigenvalues, stable order within ties
    lam = lam[::-1].copy()
    vec = vec[:, ::-1].copy()

    commutes = None
    if covariance is not None:
        sigma = np.asarray(covariance, dtype=float)
        if sigma.shape != q.shape:
            raise ValueError("covariance must match the cross-impact shape")
        lhs = q @ sigma - sigma @ q
        bound = tol * max(np.linalg.norm(q) * np.linalg.norm(sigma), np.finfo(float).tiny)
        commutes = bool(np.linalg.norm(lhs) <= bound)

    if off_diagonal_sum is None:
        off_diagonal_sum = float(np.triu(q, k=1).sum())
    return SpectralReport(
        eigenvalues=lam,
        eigenvectors=vec,
        top_eigenvalue=float(lam[0]),
        commutes_with_covariance=commutes,
        one_factor_bound=1.0 + 2.0 * off_diagonal_sum / m,
    )
