"""Network realizations and the access point's received signal.

The access point sits at the origin.  Channel power is |h|^2 = R^-alpha * G with
G ~ Exp(1) (Rayleigh amplitude) and a uniform phase; a device is in-cell when
|h|^2 exceeds the gain threshold theta.  Noise is unit-variance complex
Gaussian per sample, so gamma |h|^2 is the nominal received SNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from .codec import SparseCodeword


@dataclass(frozen=True)
class NetworkParams:
    """Propagation and placement parameters.

    ``mode`` is "square" (``n_devices`` uniform in a ``side`` x ``side`` square
    centred on the AP), "poisson" (Poisson count of intensity ``intensity``
    in the same square) or "gain" (``n_devices`` in-cell gains only, no
    geometry).
    """

    mode: str = "square"
    n_devices: int = 1000
    side: float = 500.0
    intensity: Optional[float] = None
    alpha: float = 4.0
    theta: float = 1e-6
    gamma: float = 1e6

    def __post_init__(self):
        if self.mode not in ("square", "poisson", "gain"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.alpha <= 2:
            raise ValueError("path-loss exponent must exceed 2")
        if self.theta <= 0 or self.gamma <= 0:
            raise ValueError("theta and gamma must be positive")
        if self.mode == "poisson" and (self.intensity is None or self.intensity < 0):
            raise ValueError("poisson mode needs a non-negative intensity")
        if self.n_devices < 0 or self.side <= 0:
            raise ValueError("n_devices must be >= 0 and side > 0")

    @property
    def density(self) -> float:
        """Devices per square metre."""
        if self.intensity is not None:
            return self.intensity
        return self.n_devices / self.side ** 2


@dataclass
class NetworkDraw:
    """One realization; arrays are indexed by device."""

    distance: np.ndarray
    fade: np.ndarray
    h: np.ndarray
    in_cell: np.ndarray
    payloads: list = field(default_factory=list)

    def __len__(self):
        return self.h.shape[0]

    @property
    def k_star(self) -> int:
        return int(np.count_nonzero(self.in_cell))


def _uniform_phase(rng, n):
    return np.exp(2j * np.pi * rng.random(n))


def sample_network(params: NetworkParams, seed=None) -> NetworkDraw:
    """Place devices, draw fading and label in-cell devices."""
    rng = np.random.default_rng(seed)
    if params.mode == "gain":
        habs = sample_incell_gain(params, rng, params.n_devices)
        h = habs * _uniform_phase(rng, params.n_devices)
        nan = np.full(params.n_devices, np.nan)
        return NetworkDraw(nan, nan.copy(), h, np.ones(params.n_devices, bool))
    if params.mode == "poisson":
        n = int(rng.poisson(params.intensity * params.side ** 2))
    else:
        n = params.n_devices
    xy = (rng.random((n, 2)) - 0.5) * params.side
    r = np.hypot(xy[:, 0], xy[:, 1])
    g = rng.exponential(1.0, n)
    power = r ** (-params.alpha) * g
    h = np.sqrt(power) * _uniform_phase(rng, n)
    return NetworkDraw(r, g, h, power > params.theta)


def sample_incell_gain(params: NetworkParams, seed=None, size: Optional[int] = None):
    """Draw |h| of an in-cell device by inverting F(x) = 1 - (theta / x^2)^(2/alpha)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = rng.random(size)
    return math.sqrt(params.theta) * (1.0 - u) ** (-params.alpha / 4.0)


def incell_gain_cdf(x, params: NetworkParams):
    x = np.asarray(x, dtype=float)
    lo = math.sqrt(params.theta)
    with np.errstate(divide="ignore"):
        v = 1.0 - (params.theta / x ** 2) ** (2.0 / params.alpha)
    return np.where(x > lo, v, 0.0)


def analytic_neighbors(params: NetworkParams) -> float:
    """Mean in-cell count on an infinite Poisson plane."""
    a = params.alpha
    return (2 / a) * math.pi * params.density * params.theta ** (-2 / a) * gamma_fn(2 / a)


def analytic_interference_power(params: NetworkParams) -> float:
    """Mean received power gamma * sum |h|^2 over out-of-cell devices."""
    a = params.alpha
    if a <= 2:
        raise ValueError("interference power diverges for alpha <= 2")
    return (4 / (a * (a - 2)) * math.pi * params.density * params.gamma
            * params.theta ** (1 - 2 / a) * gamma_fn(2 / a))


def synthesize_rx(h: Sequence[complex], codewords: Sequence, gamma: float,
                  noise_seed=None, noise_var: float = 1.0, length: Optional[int] = None):
    """sqrt(gamma) * sum_k h_k c_k + z.

    ``codewords`` are dense vectors or :class:`SparseCodeword` objects (one per
    device); ``length`` is needed only when there are no devices.
    """
    h = np.asarray(h, dtype=np.complex128).reshape(-1)
    if h.shape[0] != len(codewords):
        raise ValueError(f"{h.shape[0]} channels for {len(codewords)} codewords")
    n = length
    y = None
    for hk, cw in zip(h, codewords):
        if isinstance(cw, SparseCodeword):
            if n is None:
                n = cw.n_slots * cw.slot_len
            if cw.n_slots * cw.slot_len != n:
                raise ValueError("codewords have different frame lengths")
            if y is None:
                y = np.zeros(n, dtype=np.complex128)
            for i, seq in cw.slots:
                y[i * cw.slot_len:(i + 1) * cw.slot_len] += hk * seq
        else:
            cw = np.asarray(cw)
            if n is None:
                n = cw.shape[0]
            if cw.shape != (n,):
                raise ValueError("codewords have different frame lengths")
            if y is None:
                y = np.zeros(n, dtype=np.complex128)
            y += hk * cw
    if n is None:
        raise ValueError("length is required when there are no codewords")
    if y is None:
        y = np.zeros(n, dtype=np.complex128)
    y *= math.sqrt(gamma)
    if noise_var > 0:
        rng = np.random.default_rng(noise_seed)
        y += math.sqrt(noise_var / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return y
