"""Gaussian posteriors of the unconstrained least-squares problem."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import InvalidArgumentError, SingularSystemError


@dataclass(frozen=True)
class GaussianPosterior:
    """Mean `z` and covariance `C` of a Gaussian over the real unknowns."""

    z: np.ndarray
    C: np.ndarray

    @property
    def n(self):
        return self.z.shape[0]


def _solve_gram(H, y, ridge, sigma2):
    gram = H.T @ H
    if ridge:
        gram[np.diag_indices_from(gram)] += ridge
    try:
        factor = cho_factor(gram, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise SingularSystemError("Gram matrix is not positive definite") from exc
    pivots = np.diag(factor[0]) ** 2
    # a pivot at rounding level means the matrix is singular in floating point
    if not pivots.min() > gram.shape[0] * np.finfo(float).eps * np.abs(np.diag(gram)).max():
        raise SingularSystemError("Gram matrix is numerically singular")
    z = cho_solve(factor, H.T @ y, check_finite=False)
    # the full inverse is needed: every pairwise correlation feeds the tree
    C = sigma2 * cho_solve(factor, np.eye(gram.shape[0]), check_finite=False)
    C = 0.5 * (C + C.T)
    return GaussianPosterior(z=z, C=C)


def zf_posterior(system):
    """Least-squares mean ``(H'H)^-1 H'y`` and covariance ``sigma2 (H'H)^-1``."""
    if system.y is None:
        raise InvalidArgumentError("system has no observation")
    M, N = system.H.shape
    if M < N:
        raise SingularSystemError(f"{M}x{N} system is underdetermined")
    return _solve_gram(system.H, system.y, 0.0, system.noise_variance)


def mmse_posterior(system, e):
    """Posterior under the prior ``x ~ N(0, e I)``.

    Mean ``(H'H + (sigma2/e) I)^-1 H'y``, covariance
    ``sigma2 (H'H + (sigma2/e) I)^-1``.
    """
    if not e > 0:
        raise InvalidArgumentError(f"symbol energy must be positive, got {e}")
    if system.y is None:
        raise InvalidArgumentError("system has no observation")
    s2 = system.noise_variance
    return _solve_gram(system.H, system.y, s2 / e, s2)


def correlation_matrix(post):
    """All correlation coefficients ``C_ij / sqrt(C_ii C_jj)``; unit diagonal."""
    d = np.sqrt(np.diag(post.C))
    return post.C / np.outer(d, d)


def correlation(post, i, j):
    n = post.n
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidArgumentError(f"indices ({i}, {j}) out of range for n={n}")
    if i == j:
        raise InvalidArgumentError("correlation needs two distinct indices")
    C = post.C
    return C[i, j] / np.sqrt(C[i, i] * C[j, j])


def squared_correlations(post):
    """Edge weights rho_ij^2 with a zero diagonal."""
    C = post.C
    d = np.diag(C)
    w = C * C / np.outer(d, d)
    np.fill_diagonal(w, 0.0)
    return w


def mutual_information(rho):
    """Mutual information ``-log(1 - rho^2)`` (nats) of two jointly Gaussian variables."""
    rho = float(rho)
    if not abs(rho) < 1:
        raise InvalidArgumentError(f"|rho| must be < 1, got {rho}")
    return -np.log1p(-rho * rho)
