"""Transmission schemes and per-frame decode outcomes.

Three schemes share one two-user topology (near user UE1, far user UE2, no
direct BS<->UE2 uplink path strong enough to matter on its own):

* ``HDU_CNOMA`` - three slots.  Slot 1: downlink power-domain NOMA, UE1
  decodes the far user's signal first (SIC) then its own.  Slot 2: UE1
  transmits a superposition of its own uplink signal and a relayed copy of
  the far user's downlink signal; the BS already knows the relayed part and
  cancels it, UE2 combines direct and relayed copies with MRC when UE1's SIC
  succeeded.  Slot 3: uplink NOMA, both users transmit and the BS decodes
  the stronger received user first.
* ``CNOMA`` - same three slots, but slot 2 carries only the relayed signal
  (no uplink piggyback), so UE1's uplink rides on slot 3 alone.
* ``NONCOOP_NOMA`` - two slots only: downlink NOMA then uplink NOMA, no
  cooperation, so UE2 decodes from its direct link only.

Rate targets are fixed per message; a scheme with ``prelog_divisor`` nu needs
SINR >= 2**(nu*R) - 1 to carry R bit/s/Hz end-to-end, because each message
only occupies 1/nu of the frame.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .channel import ChannelRealization, ChannelStats

#: Logical link names, in canonical (report/CSV) order.
ALL_LINKS = ("ue1_dl", "ue2_dl", "ue1_ul_t2", "ue1_ul_t3", "ue2_ul")


class User(Enum):
    UE1 = "ue1"
    UE2 = "ue2"


class Scheme(Enum):
    """Transmission scheme selector; the value doubles as the CSV token."""

    HDU_CNOMA = "hdu_cnoma"
    CNOMA = "cnoma"
    NONCOOP_NOMA = "noncoop_noma"

    @property
    def prelog_divisor(self) -> int:
        """Number of slots a frame is split into (the rate pre-log is 1/nu)."""
        return 2 if self is Scheme.NONCOOP_NOMA else 3

    @property
    def links(self) -> tuple[str, ...]:
        """Links whose outage is defined for this scheme."""
        if self is Scheme.HDU_CNOMA:
            return ALL_LINKS
        # Baselines have no uplink transmission in the cooperative slot.
        return tuple(l for l in ALL_LINKS if l != "ue1_ul_t2")


@dataclass(frozen=True)
class PowerAllocation:
    """Fractional power splits of the two superposition stages.

    Slot 1 (downlink): the BS gives the far user the larger share, so
    a_ue1_t1 <= a_ue2_t1.  Slot 2 (UE1's transmission): a_bs_t2 goes to
    UE1's own uplink signal, a_ue2_t2 to the relayed far-user signal.
    Each pair must sum to one.
    """

    a_ue1_t1: float = 0.05
    a_ue2_t1: float = 0.95
    a_bs_t2: float = 0.1
    a_ue2_t2: float = 0.9

    def __post_init__(self) -> None:
        for name in ("a_ue1_t1", "a_ue2_t1", "a_bs_t2", "a_ue2_t2"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if abs(self.a_ue1_t1 + self.a_ue2_t1 - 1.0) > 1e-12:
            raise ValueError(
                f"slot-1 shares must sum to 1, got {self.a_ue1_t1 + self.a_ue2_t1!r}"
            )
        if abs(self.a_bs_t2 + self.a_ue2_t2 - 1.0) > 1e-12:
            raise ValueError(
                f"slot-2 shares must sum to 1, got {self.a_bs_t2 + self.a_ue2_t2!r}"
            )
        if self.a_ue1_t1 > self.a_ue2_t1:
            raise ValueError(
                "far user must get at least the near user's downlink share, "
                f"got a_ue1_t1={self.a_ue1_t1} > a_ue2_t1={self.a_ue2_t1}"
            )


@dataclass(frozen=True)
class RateTargets:
    """Target rates in bit/s/Hz for the four end-to-end messages."""

    r_ue1_dl: float = 1.0
    r_ue2_dl: float = 1.0
    r_ue1_ul: float = 1.0
    r_ue2_ul: float = 1.0

    def __post_init__(self) -> None:
        for name in ("r_ue1_dl", "r_ue2_dl", "r_ue1_ul", "r_ue2_ul"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def rate_for(self, link: str) -> float:
        """Rate target carried by a logical link (slot-2 and slot-3 uplink
        both carry UE1's uplink message)."""
        return {
            "ue1_dl": self.r_ue1_dl,
            "ue2_dl": self.r_ue2_dl,
            "ue1_ul_t2": self.r_ue1_ul,
            "ue1_ul_t3": self.r_ue1_ul,
            "ue2_ul": self.r_ue2_ul,
        }[link]


@dataclass(frozen=True)
class SinrThresholds:
    """Decode thresholds gamma = 2**(nu*R) - 1 for each message.

    ``prelog_divisor`` records the nu the thresholds were built with so a
    mismatched scheme/threshold pairing can be rejected instead of silently
    producing wrong outage flags.
    """

    g_ue1_dl: float
    g_ue2_dl: float
    g_ue1_ul: float
    g_ue2_ul: float
    prelog_divisor: int

    def __post_init__(self) -> None:
        for name in ("g_ue1_dl", "g_ue2_dl", "g_ue1_ul", "g_ue2_ul"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.prelog_divisor < 1:
            raise ValueError("prelog_divisor must be a positive integer")

    @classmethod
    def from_rates(cls, rates: RateTargets, prelog_divisor: int) -> "SinrThresholds":
        def gamma(r: float) -> float:
            return 2.0 ** (prelog_divisor * r) - 1.0

        return cls(
            g_ue1_dl=gamma(rates.r_ue1_dl),
            g_ue2_dl=gamma(rates.r_ue2_dl),
            g_ue1_ul=gamma(rates.r_ue1_ul),
            g_ue2_ul=gamma(rates.r_ue2_ul),
            prelog_divisor=prelog_divisor,
        )


@dataclass(frozen=True)
class SystemParams:
    """Everything that defines the system apart from the operating SNR."""

    stats: ChannelStats
    power: PowerAllocation
    rates: RateTargets

    @classmethod
    def defaults(cls) -> "SystemParams":
        """Baseline parameterization used by the bundled presets."""
        return cls(stats=ChannelStats(), power=PowerAllocation(), rates=RateTargets())

    def thresholds(self, scheme: Scheme) -> SinrThresholds:
        return SinrThresholds.from_rates(self.rates, scheme.prelog_divisor)


@dataclass(frozen=True)
class FrameOutcome:
    """Per-link decode success flags for one frame (or a batch of frames).

    ``ue1_ul_t2_ok`` is None for schemes without a cooperative-slot uplink.
    Flags are Python bools for scalar evaluation and boolean arrays for
    batch evaluation.
    """

    ue1_dl_ok: bool
    ue2_dl_ok: bool
    ue1_ul_t2_ok: Optional[bool]
    ue1_ul_t3_ok: bool
    ue2_ul_ok: bool

    def flag(self, link: str):
        return {
            "ue1_dl": self.ue1_dl_ok,
            "ue2_dl": self.ue2_dl_ok,
            "ue1_ul_t2": self.ue1_ul_t2_ok,
            "ue1_ul_t3": self.ue1_ul_t3_ok,
            "ue2_ul": self.ue2_ul_ok,
        }[link]


def effective_allocation(scheme: Scheme, power: PowerAllocation) -> PowerAllocation:
    """Power split actually transmitted under a scheme.

    The conventional cooperative baseline dedicates the whole cooperative
    slot to relaying, so its slot-2 split is forced to (0, 1) regardless of
    the configured values.  Other schemes transmit the split as configured.
    """
    if scheme is Scheme.CNOMA:
        return replace(power, a_bs_t2=0.0, a_ue2_t2=1.0)
    return power


class DownlinkSinr(NamedTuple):
    sic_at_ue1: float  # far-user signal decoded at UE1 before cancellation
    ue1_own: float  # UE1's own signal after cancelling the far-user part
    ue2_direct: float  # far-user signal at UE2, near-user part as interference


class CoopSlotSinr(NamedTuple):
    uplink_at_bs: float  # UE1's piggybacked uplink after BS cancels the relayed part
    relay_at_ue2: float  # relayed far-user signal at UE2, uplink part as interference


class UplinkSinr(NamedTuple):
    first_user: User  # decoded first at the BS (larger received power)
    first: float  # SINR of the first decode, other user as interference
    second: float  # SNR of the second decode after cancelling the first


def _check_rho(rho: float) -> None:
    if not rho > 0:
        raise ValueError(f"transmit SNR must be positive, got rho={rho}")


def sinr_t1(power: PowerAllocation, ch: ChannelRealization, rho: float) -> DownlinkSinr:
    """Downlink-slot SINRs at both receivers."""
    _check_rho(rho)
    inv_rho = 1.0 / rho
    g1, g2 = ch.g_bs_ue1, ch.g_bs_ue2
    return DownlinkSinr(
        sic_at_ue1=g1 * power.a_ue2_t1 / (g1 * power.a_ue1_t1 + inv_rho),
        ue1_own=g1 * power.a_ue1_t1 * rho,
        ue2_direct=g2 * power.a_ue2_t1 / (g2 * power.a_ue1_t1 + inv_rho),
    )


def sinr_t2(power: PowerAllocation, ch: ChannelRealization, rho: float) -> CoopSlotSinr:
    """Cooperative-slot SINRs: uplink branch at the BS, relay branch at UE2.

    The BS knows the relayed far-user signal (it transmitted it in slot 1)
    and cancels it, leaving UE1's uplink signal interference-free.  UE2
    receives the relayed copy with the uplink part as interference.
    """
    _check_rho(rho)
    g1, g12 = ch.g_bs_ue1, ch.g_ue1_ue2
    return CoopSlotSinr(
        uplink_at_bs=g1 * power.a_bs_t2 * rho,
        relay_at_ue2=g12 * power.a_ue2_t2 / (g12 * power.a_bs_t2 + 1.0 / rho),
    )


def mrc_sinr(sinr_a: float, sinr_b: float) -> float:
    """Post-combining SINR of maximum-ratio combining two branches."""
    if np.any(np.asarray(sinr_a) < 0) or np.any(np.asarray(sinr_b) < 0):
        raise ValueError("branch SINRs must be non-negative")
    return sinr_a + sinr_b


def sinr_t3(ch: ChannelRealization, rho: float) -> UplinkSinr:
    """Uplink-slot SINRs under successive decoding at the BS.

    The user with the larger instantaneous gain is decoded first (the other
    one acting as interference), then cancelled.  An exact tie goes to UE1.
    Scalar gains only; batch evaluation handles both orders vectorially.
    """
    _check_rho(rho)
    inv_rho = 1.0 / rho
    g1, g2 = ch.g_bs_ue1, ch.g_bs_ue2
    if g1 >= g2:
        return UplinkSinr(User.UE1, first=g1 / (g2 + inv_rho), second=g2 * rho)
    return UplinkSinr(User.UE2, first=g2 / (g1 + inv_rho), second=g1 * rho)


def evaluate_frame(
    scheme: Scheme,
    power: PowerAllocation,
    th: SinrThresholds,
    ch: ChannelRealization,
    rho: float,
) -> FrameOutcome:
    """Decode success flags of every link in one fading block.

    * UE1's downlink needs both of its slot-1 decodes (far-user signal, then
      its own) to clear their thresholds.
    * UE2's downlink uses MRC of direct + relayed copies when UE1's SIC
      succeeded (UE1 only relays what it decoded), direct only otherwise.
      The non-cooperative scheme is always direct only.
    * UE1's cooperative-slot uplink only needs its own branch at the BS.
    * Slot-3 uplink: the first-decoded user needs its SINR over the other's
      interference; the second decode additionally requires the first to
      have succeeded (no cancellation without it).
    """
    if th.prelog_divisor != scheme.prelog_divisor:
        raise ValueError(
            f"thresholds built for prelog divisor {th.prelog_divisor}, "
            f"but {scheme.value} uses {scheme.prelog_divisor}"
        )
    power = effective_allocation(scheme, power)

    dl = sinr_t1(power, ch, rho)
    sic_ok = bool(dl.sic_at_ue1 >= th.g_ue2_dl)
    ue1_dl_ok = sic_ok and bool(dl.ue1_own >= th.g_ue1_dl)

    if scheme is Scheme.NONCOOP_NOMA:
        ue2_dl_ok = bool(dl.ue2_direct >= th.g_ue2_dl)
        ue1_ul_t2_ok = None
    else:
        coop = sinr_t2(power, ch, rho)
        ue2_sinr = mrc_sinr(dl.ue2_direct, coop.relay_at_ue2) if sic_ok else dl.ue2_direct
        ue2_dl_ok = bool(ue2_sinr >= th.g_ue2_dl)
        if scheme is Scheme.HDU_CNOMA:
            ue1_ul_t2_ok = bool(coop.uplink_at_bs >= th.g_ue1_ul)
        else:
            ue1_ul_t2_ok = None

    ul = sinr_t3(ch, rho)
    if ul.first_user is User.UE1:
        ue1_ul_t3_ok = bool(ul.first >= th.g_ue1_ul)
        ue2_ul_ok = ue1_ul_t3_ok and bool(ul.second >= th.g_ue2_ul)
    else:
        ue2_ul_ok = bool(ul.first >= th.g_ue2_ul)
        ue1_ul_t3_ok = ue2_ul_ok and bool(ul.second >= th.g_ue1_ul)

    return FrameOutcome(ue1_dl_ok, ue2_dl_ok, ue1_ul_t2_ok, ue1_ul_t3_ok, ue2_ul_ok)


def evaluate_frames(
    scheme: Scheme,
    power: PowerAllocation,
    th: SinrThresholds,
    gains: np.ndarray,
    rho: float,
) -> FrameOutcome:
    """Vectorized :func:`evaluate_frame` over a (3, n) gain batch.

    Row order is (bs_ue1, bs_ue2, ue1_ue2) as produced by
    :func:`noma_lab.channel.sample_gains`.  Returns a FrameOutcome whose
    flags are boolean arrays of length n; agreement with the scalar path is
    element-wise exact.
    """
    if th.prelog_divisor != scheme.prelog_divisor:
        raise ValueError(
            f"thresholds built for prelog divisor {th.prelog_divisor}, "
            f"but {scheme.value} uses {scheme.prelog_divisor}"
        )
    gains = np.asarray(gains, dtype=float)
    if gains.ndim != 2 or gains.shape[0] != 3:
        raise ValueError(f"gains must have shape (3, n), got {gains.shape}")
    power = effective_allocation(scheme, power)
    g1, g2, g12 = gains
    inv_rho = 1.0 / rho
    _check_rho(rho)

    sic = g1 * power.a_ue2_t1 / (g1 * power.a_ue1_t1 + inv_rho)
    own = g1 * power.a_ue1_t1 * rho
    direct = g2 * power.a_ue2_t1 / (g2 * power.a_ue1_t1 + inv_rho)
    sic_ok = sic >= th.g_ue2_dl
    ue1_dl_ok = sic_ok & (own >= th.g_ue1_dl)

    if scheme is Scheme.NONCOOP_NOMA:
        ue2_dl_ok = direct >= th.g_ue2_dl
        ue1_ul_t2_ok = None
    else:
        relay = g12 * power.a_ue2_t2 / (g12 * power.a_bs_t2 + inv_rho)
        ue2_dl_ok = np.where(sic_ok, direct + relay, direct) >= th.g_ue2_dl
        if scheme is Scheme.HDU_CNOMA:
            ue1_ul_t2_ok = g1 * power.a_bs_t2 * rho >= th.g_ue1_ul
        else:
            ue1_ul_t2_ok = None

    ue1_first = g1 >= g2
    first_if_ue1 = g1 / (g2 + inv_rho)
    first_if_ue2 = g2 / (g1 + inv_rho)
    ue1_ul_t3_ok = np.where(
        ue1_first,
        first_if_ue1 >= th.g_ue1_ul,
        (first_if_ue2 >= th.g_ue2_ul) & (g1 * rho >= th.g_ue1_ul),
    )
    ue2_ul_ok = np.where(
        ue1_first,
        (first_if_ue1 >= th.g_ue1_ul) & (g2 * rho >= th.g_ue2_ul),
        first_if_ue2 >= th.g_ue2_ul,
    )

    return FrameOutcome(ue1_dl_ok, ue2_dl_ok, ue1_ul_t2_ok, ue1_ul_t3_ok, ue2_ul_ok)
