"""Random MIMO channels, complex-to-real expansion and transmission.

All noise bookkeeping lives in the real-valued model: ``noise_variance`` is
the variance of each real noise component, and the SNR is
``Es/N0 = n_vars * e / noise_variance`` with ``n_vars`` the number of real
unknowns and ``e`` the mean PAM energy per real dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class LinearSystem:
    """Real observation model ``y = H x + eps``.

    Attributes
    ----------
    H : ndarray, shape (M, N)
    noise_variance : float
        Variance of each real noise component.
    y : ndarray, shape (M,), optional
        Observation; ``None`` until something is transmitted.
    n_complex : int, optional
        Number of complex transmit antennas when the system came from a
        complex channel, ``None`` for natively real systems.
    """

    H: np.ndarray
    noise_variance: float
    y: Optional[np.ndarray] = None
    n_complex: Optional[int] = None

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        if H.ndim != 2:
            raise InvalidArgumentError("H must be a matrix")
        if self.noise_variance < 0 or not np.isfinite(self.noise_variance):
            raise InvalidArgumentError("noise variance must be finite and >= 0")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        if self.y is not None:
            y = np.asarray(self.y, dtype=float)
            if y.shape != (H.shape[0],):
                raise InvalidArgumentError(
                    f"y has shape {y.shape}, expected ({H.shape[0]},)"
                )
            object.__setattr__(self, "y", y)

    @property
    def n_vars(self):
        return self.H.shape[1]

    def with_observation(self, y):
        return replace(self, y=y)


def _check_dims(m, n):
    if int(m) != m or int(n) != n or m < 1 or n < 1:
        raise InvalidArgumentError(f"channel dimensions must be positive, got {m}x{n}")


def sample_channel(m, n, rng):
    """m x n matrix of i.i.d. CN(0, 1) gains (each part has variance 1/2)."""
    _check_dims(m, n)
    parts = rng.standard_normal((2, m, n)) * np.sqrt(0.5)
    return parts[0] + 1j * parts[1]


def sample_real_channel(m, n, rng):
    """m x n matrix of i.i.d. real N(0, 1) gains."""
    _check_dims(m, n)
    return rng.standard_normal((m, n))


def real_channel_matrix(hc):
    """Block matrix [[Re, -Im], [Im, Re]] of a complex channel."""
    hc = np.asarray(hc, dtype=complex)
    if hc.ndim != 2:
        raise InvalidArgumentError("complex channel must be a matrix")
    re, im = hc.real, hc.imag
    return np.block([[re, -im], [im, re]])


def expand_to_real(hc, y_complex, sigma2):
    """Double-size real system equivalent to a complex one.

    `sigma2` is the total complex noise variance per receive antenna, so the
    returned system carries ``sigma2 / 2`` per real component.
    """
    hc = np.asarray(hc, dtype=complex)
    y_complex = np.asarray(y_complex, dtype=complex)
    if hc.ndim != 2 or y_complex.shape != (hc.shape[0],):
        raise InvalidArgumentError(
            f"observation of shape {y_complex.shape} does not match channel {hc.shape}"
        )
    return LinearSystem(
        H=real_channel_matrix(hc),
        noise_variance=sigma2 / 2.0,
        y=np.concatenate([y_complex.real, y_complex.imag]),
        n_complex=hc.shape[1],
    )


def snr_to_noise_variance(snr_db, n_vars, e):
    """Per-real-component noise variance for ``10 log10(n_vars e / sigma2) = snr_db``."""
    if not e > 0:
        raise InvalidArgumentError(f"symbol energy must be positive, got {e}")
    if n_vars < 1:
        raise InvalidArgumentError(f"n_vars must be >= 1, got {n_vars}")
    return n_vars * e / 10.0 ** (snr_db / 10.0)


def transmit(system, x, rng):
    """Noisy observation ``H x + eps`` for the real system."""
    x = np.asarray(x, dtype=float)
    if x.shape != (system.n_vars,):
        raise InvalidArgumentError(
            f"symbol vector has shape {x.shape}, expected ({system.n_vars},)"
        )
    y = system.H @ x
    if system.noise_variance > 0:
        y = y + rng.standard_normal(y.shape[0]) * np.sqrt(system.noise_variance)
    return y
