"""Rayleigh block-fading channel model.

Every link carries a complex Gaussian tap, so the squared envelope |h|^2 is
exponentially distributed with mean equal to the average link power.  All
randomness flows through counter-based substreams derived from a single
master seed, which makes every sample sequence reproducible regardless of
how the surrounding computation is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class LinkId(Enum):
    """The three physical links of the two-user relay topology."""

    BS_UE1 = "bs_ue1"
    BS_UE2 = "bs_ue2"
    UE1_UE2 = "ue1_ue2"


def db_to_linear(x_db: float) -> float:
    """Convert a power quantity from dB to linear scale."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """Convert a linear power quantity to dB."""
    if x <= 0:
        raise ValueError(f"dB conversion needs a positive value, got {x}")
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class ChannelStats:
    """Average power of each fading link.

    The near user (UE1) is the cell-center terminal, so its direct link must
    be stronger on average than the far user's: beta_bs_ue1 > beta_bs_ue2.
    """

    beta_bs_ue1: float = 1.0  # BS <-> UE1 mean gain
    beta_bs_ue2: float = 0.05  # BS <-> UE2 mean gain
    beta_ue1_ue2: float = 0.8  # UE1 <-> UE2 mean gain

    def __post_init__(self) -> None:
        for name in ("beta_bs_ue1", "beta_bs_ue2", "beta_ue1_ue2"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if not self.beta_bs_ue1 > self.beta_bs_ue2:
            raise ValueError(
                "near-user link must be stronger on average: "
                f"beta_bs_ue1={self.beta_bs_ue1} <= beta_bs_ue2={self.beta_bs_ue2}"
            )

    def beta(self, link: LinkId) -> float:
        return {
            LinkId.BS_UE1: self.beta_bs_ue1,
            LinkId.BS_UE2: self.beta_bs_ue2,
            LinkId.UE1_UE2: self.beta_ue1_ue2,
        }[link]


@dataclass(frozen=True)
class ChannelRealization:
    """Instantaneous squared-envelope gains for one fading block.

    Fields may hold scalars (one frame) or equal-length arrays (a batch of
    frames); the SINR arithmetic downstream broadcasts over either.
    """

    g_bs_ue1: float
    g_bs_ue2: float
    g_ue1_ue2: float

    def __post_init__(self) -> None:
        for name in ("g_bs_ue1", "g_bs_ue2", "g_ue1_ue2"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ValueError(f"{name} must be non-negative")

    def gain(self, link: LinkId) -> float:
        return {
            LinkId.BS_UE1: self.g_bs_ue1,
            LinkId.BS_UE2: self.g_bs_ue2,
            LinkId.UE1_UE2: self.g_ue1_ue2,
        }[link]


def gain_cdf(beta: float, x: float) -> float:
    """P(|h|^2 <= x) for an exponential gain with mean beta.

    F(x) = 1 - exp(-x / beta)
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if np.any(np.asarray(x) < 0):
        raise ValueError(f"gain_cdf is defined for x >= 0, got {x}")
    return -np.expm1(-np.asarray(x) / beta) if np.ndim(x) else -np.expm1(-x / beta)


def gain_pdf(beta: float, x: float) -> float:
    """Density of the exponential gain: f(x) = exp(-x / beta) / beta."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if np.any(np.asarray(x) < 0):
        raise ValueError(f"gain_pdf is defined for x >= 0, got {x}")
    return np.exp(-x / beta) / beta


def substream(master_seed: int, *indices: int) -> np.random.Generator:
    """Derive an independent, reproducible random stream.

    The (master_seed, indices) pair keys a Philox counter-based generator via
    numpy's SeedSequence spawn mechanism, so the same coordinates always
    yield bit-identical draws and distinct coordinates yield statistically
    independent streams.  Monte Carlo code indexes substreams by
    (scheme, grid point, chunk), which makes results independent of worker
    count and execution order.
    """
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(indices))
    return np.random.Generator(np.random.Philox(seq))


def _inverse_cdf_exponential(beta: float, u: np.ndarray) -> np.ndarray:
    # u in [0, 1) maps to a finite non-negative gain; log1p keeps precision
    # for small u and avoids evaluating log(0) at u -> 1.
    return -beta * np.log1p(-u)


def sample_gains(stats: ChannelStats, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw n joint realizations of the three link gains.

    Returns an array of shape (3, n) ordered (bs_ue1, bs_ue2, ue1_ue2).
    Sampling uses inverse-CDF transformation of uniforms so the draw count
    per frame is fixed, which pins the stream layout for reproducibility.
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    u = rng.random((3, n))
    betas = np.array([stats.beta_bs_ue1, stats.beta_bs_ue2, stats.beta_ue1_ue2])
    return _inverse_cdf_exponential(betas[:, None], u)


def sample_realization(stats: ChannelStats, rng: np.random.Generator) -> ChannelRealization:
    """Draw a single fading block (one gain per link)."""
    u = rng.random(3)
    return ChannelRealization(
        g_bs_ue1=_inverse_cdf_exponential(stats.beta_bs_ue1, u[0]),
        g_bs_ue2=_inverse_cdf_exponential(stats.beta_bs_ue2, u[1]),
        g_ue1_ue2=_inverse_cdf_exponential(stats.beta_ue1_ue2, u[2]),
    )
