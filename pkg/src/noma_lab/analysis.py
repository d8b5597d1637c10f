"""Closed-form outage probabilities and derived performance metrics.

Each expression here is an exact (or, for the far user's downlink, a
series-approximated) Rayleigh-fading average of the per-frame decode events
in :mod:`noma_lab.schemes`.  Every function takes the transmit SNR ``rho``
in linear scale; dB conversion belongs to the interface layer.

Two expressions are conditional and *refuse* rather than extrapolate:

* the downlink forms need the far user's power share to dominate its own
  interference at threshold (a_ue2_t1 - a_ue1_t1 * gamma > 0), otherwise the
  downlink outage is identically 1;
* the uplink-slot forms need both uplink thresholds above one (rate targets
  above 1/prelog), which is what lets the decode-order constraint be dropped
  from the probability regions.  Outside that regime callers fall back to
  Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Mapping, Optional, Sequence

import numpy as np
from scipy.integrate import quad as _adaptive_quad

from .channel import ChannelStats
from .schemes import (
    ALL_LINKS,
    PowerAllocation,
    RateTargets,
    Scheme,
    SinrThresholds,
    SystemParams,
    User,
    effective_allocation,
)


class ClosedFormUnavailable(Exception):
    """A closed-form expression's validity condition is not met.

    Callers either substitute the known degenerate value (downlink: outage
    probability 1) or fall back to Monte Carlo (uplink slot 3).
    """


class QuadratureError(RuntimeError):
    """Numeric integration could not meet the requested tolerance."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Knobs for the far-user downlink outage integral."""

    n_terms: int = 100  # Chebyshev node count of the series approximation
    oracle_tol: float = 1e-10  # absolute tolerance of the adaptive oracle

    def __post_init__(self) -> None:
        if self.n_terms < 1:
            raise ValueError(f"n_terms must be >= 1, got {self.n_terms}")
        if not self.oracle_tol > 0:
            raise ValueError(f"oracle_tol must be positive, got {self.oracle_tol}")


@dataclass(frozen=True)
class DerivedConstants:
    """Threshold constants shared by the downlink closed forms.

    far_decode_min: minimum gain*rho for a receiver to pull the far user's
        downlink signal through the near-user interference share.
    ue1_decode_min: minimum g_bs_ue1*rho for UE1 to complete both downlink
        decodes (far user's signal first, then its own after cancellation).
    relay_contrib_max: largest relay-branch SINR value relevant to the far
        user's MRC outage integral: the decode threshold, capped by the hard
        ceiling a_ue2_t2/a_bs_t2 of the relay branch (infinite when
        a_bs_t2 = 0, i.e. the whole cooperative slot relays).
    """

    far_decode_min: float
    ue1_decode_min: float
    relay_contrib_max: float


def _ratio_or_inf(num: float, den: float) -> float:
    if den > 0:
        return num / den
    return 0.0 if num == 0 else math.inf


def derived_constants(power: PowerAllocation, th: SinrThresholds) -> DerivedConstants:
    """Compute the downlink threshold constants.

    Refuses when the far user's downlink is interference-limited below its
    threshold (a_ue2_t1 - a_ue1_t1*gamma <= 0): no gain, however large, can
    decode it, and the downlink closed forms degenerate to 1.
    """
    margin = power.a_ue2_t1 - power.a_ue1_t1 * th.g_ue2_dl
    if not margin > 0:
        raise ClosedFormUnavailable(
            "far-user downlink threshold unreachable: "
            f"a_ue2_t1 - a_ue1_t1*gamma = {margin:g} <= 0"
        )
    far_decode_min = th.g_ue2_dl / margin
    ue1_decode_min = max(far_decode_min, _ratio_or_inf(th.g_ue1_dl, power.a_ue1_t1))
    relay_contrib_max = min(
        th.g_ue2_dl, _ratio_or_inf(power.a_ue2_t2, power.a_bs_t2)
    )
    return DerivedConstants(far_decode_min, ue1_decode_min, relay_contrib_max)


def pout_ue1_dl(
    power: PowerAllocation,
    th: SinrThresholds,
    rho: float,
    stats: Optional[ChannelStats] = None,
) -> float:
    """Near-user downlink outage: fails either of its two slot-1 decodes.

    Both decode events are monotone in the same gain, so the outage is a
    single exponential tail 1 - exp(-ue1_decode_min / (beta * rho)).  With
    ``stats`` omitted the near-user link mean is taken as 1 (the default
    normalization); pass stats to scale for other channel profiles.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    beta = stats.beta_bs_ue1 if stats is not None else 1.0
    try:
        const = derived_constants(power, th)
    except ClosedFormUnavailable:
        return 1.0
    return float(-np.expm1(-const.ue1_decode_min / (beta * rho)))


def q1_q2(
    power: PowerAllocation,
    th: SinrThresholds,
    rho: float,
    stats: ChannelStats,
) -> tuple[float, float]:
    """Probabilities that UE1 (q1) and UE2 (q2) each fail to decode the far
    user's downlink signal from the direct BS link alone."""
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    const = derived_constants(power, th)  # refuses when threshold unreachable
    q1 = float(-np.expm1(-const.far_decode_min / (stats.beta_bs_ue1 * rho)))
    q2 = float(-np.expm1(-const.far_decode_min / (stats.beta_bs_ue2 * rho)))
    return q1, q2


def _relay_sinr_cdf(
    power: PowerAllocation, stats: ChannelStats, rho: float, x: float, cap: float
) -> float:
    """CDF of the relay-branch SINR at UE2, evaluated at x <= cap.

    At the support boundary (x equal to the branch's hard ceiling) the
    exponent diverges; the value is 1 by continuity.
    """
    if x >= cap and not math.isinf(cap):
        return 1.0
    den = power.a_ue2_t2 - power.a_bs_t2 * x
    return float(-np.expm1(-x / (den * stats.beta_ue1_ue2 * rho)))


def q3_gauss_chebyshev(
    power: PowerAllocation,
    th: SinrThresholds,
    rho: float,
    stats: ChannelStats,
    quad: QuadratureConfig,
) -> float:
    """Series approximation of the far user's combined-branch outage term.

    q3 = Pr{direct SINR + relay SINR < gamma}, written as the relay-branch
    CDF at the integration cap minus a weighted node sum over Chebyshev
    points l_i = (cap/2)(1 + cos((2i-1)pi/(2n))).  The node rule is the
    midpoint rule in the angular variable, so its error decays as 1/n^2.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    const = derived_constants(power, th)
    cap = const.relay_contrib_max
    if cap == 0.0:
        return 0.0
    gamma = th.g_ue2_dl
    margin = power.a_ue2_t1 - power.a_ue1_t1 * gamma

    ratio = _ratio_or_inf(power.a_ue2_t2, power.a_bs_t2)
    f_cap = _relay_sinr_cdf(power, stats, rho, cap, ratio)

    n = quad.n_terms
    theta = (2.0 * np.arange(1, n + 1) - 1.0) * np.pi / (2.0 * n)
    nodes = 0.5 * cap * (1.0 + np.cos(theta))
    weights = (np.pi / n) * np.abs(np.sin(theta))

    den_relay = power.a_ue2_t2 - power.a_bs_t2 * nodes
    den_direct = margin + power.a_ue1_t1 * nodes
    if np.any(den_relay <= 0) or np.any(den_direct <= 0):
        raise QuadratureError(
            "integrand undefined at a quadrature node; "
            "threshold margin or relay cap violated mid-interval"
        )
    g_vals = (
        np.exp(
            -nodes / (den_relay * stats.beta_ue1_ue2 * rho)
            - (gamma - nodes) / (den_direct * stats.beta_bs_ue2 * rho)
        )
        / den_relay**2
    )
    series = float(np.sum(weights * g_vals))
    value = f_cap - power.a_ue2_t2 * cap / (2.0 * stats.beta_ue1_ue2 * rho) * series
    # Truncation error can push tiny tail values slightly outside [0, 1].
    return float(min(1.0, max(0.0, value)))


def q3_numeric_oracle(
    power: PowerAllocation,
    th: SinrThresholds,
    rho: float,
    stats: ChannelStats,
    tol: float = 1e-10,
) -> float:
    """Adaptive-quadrature reference for :func:`q3_gauss_chebyshev`.

    Integrates (relay-branch SINR density) x (direct-branch SINR CDF at
    gamma minus the relay contribution) over the relay contribution.  The
    inner variable is removed analytically through the direct branch's CDF,
    leaving a one-dimensional integral that adaptive quadrature handles to
    within ``tol`` absolute error.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    const = derived_constants(power, th)
    cap = const.relay_contrib_max
    if cap == 0.0:
        return 0.0
    gamma = th.g_ue2_dl
    margin = power.a_ue2_t1 - power.a_ue1_t1 * gamma
    b2 = stats.beta_bs_ue2
    b12 = stats.beta_ue1_ue2

    def integrand(x: float) -> float:
        den_relay = power.a_ue2_t2 - power.a_bs_t2 * x
        if den_relay <= 0.0:
            return 0.0
        density = (
            power.a_ue2_t2
            / (den_relay**2 * b12 * rho)
            * math.exp(-x / (den_relay * b12 * rho))
        )
        den_direct = margin + power.a_ue1_t1 * x
        cdf_direct = -math.expm1(-(gamma - x) / (den_direct * b2 * rho))
        return density * cdf_direct

    result = _adaptive_quad(
        integrand, 0.0, cap, epsabs=tol, epsrel=0.0, limit=400, full_output=1
    )
    value, abserr = result[0], result[1]
    if len(result) > 3 or abserr > tol:
        raise QuadratureError(
            f"adaptive quadrature did not reach tol={tol:g} "
            f"(abserr={abserr:g}): {result[3] if len(result) > 3 else 'n/a'}"
        )
    return float(min(1.0, max(0.0, value)))


def pout_ue2_dl(
    power: PowerAllocation,
    th: SinrThresholds,
    rho: float,
    stats: ChannelStats,
    quad: QuadratureConfig,
) -> float:
    """Far-user downlink outage with cooperative combining.

    With probability q1 the near user failed to decode and no relayed copy
    exists, so the far user lives or dies on its direct branch (q2); with
    probability 1 - q1 the relayed copy arrives and the relevant failure is
    the combined-branch term q3.
    """
    try:
        q1, q2 = q1_q2(power, th, rho, stats)
    except ClosedFormUnavailable:
        return 1.0
    q3 = q3_gauss_chebyshev(power, th, rho, stats, quad)
    return q1 * q2 + (1.0 - q1) * q3


def pout_ue1_ul_t2(
    power: PowerAllocation,
    th: SinrThresholds,
    rho: float,
    stats: ChannelStats,
) -> float:
    """Outage of the near user's piggybacked uplink in the cooperative slot.

    The BS cancels the relayed part it already knows, so the branch is
    interference-free and the outage is a single exponential tail.  With no
    uplink share at all (a_bs_t2 = 0) a positive threshold is unreachable.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if th.g_ue1_ul == 0.0:
        return 0.0
    if power.a_bs_t2 == 0.0:
        return 1.0
    return float(
        -np.expm1(-th.g_ue1_ul / (stats.beta_bs_ue1 * power.a_bs_t2 * rho))
    )


def _t3_success_terms(
    th: SinrThresholds, stats: ChannelStats
) -> tuple[float, float, float, float, float, float]:
    g1, g2 = th.g_ue1_ul, th.g_ue2_ul
    if not (g1 > 1.0 and g2 > 1.0):
        raise ClosedFormUnavailable(
            "uplink-slot closed form needs both thresholds above 1 "
            f"(got {g1:g}, {g2:g}); fall back to Monte Carlo"
        )
    b1, b2 = stats.beta_bs_ue1, stats.beta_bs_ue2
    # Fading-averaged weights of the two success regions: "own decode first"
    # and "other user decoded first, own decode after cancellation".
    w1 = b1 / (b1 + g1 * b2)
    w2 = b2 / (b2 + g2 * b1)
    return g1, g2, b1, b2, w1, w2


def pout_ul_t3(
    th: SinrThresholds, rho: float, stats: ChannelStats, user: User
) -> float:
    """Uplink-slot outage under successive decoding at the BS.

    Valid only when both uplink thresholds exceed 1: then "decoded first"
    coincides with "has the larger gain", and the success region splits into
    two disjoint exponential-tail terms.  Interference from the other user
    does not vanish with SNR, which is why this probability floors out.
    """
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    g1, g2, b1, b2, w1, w2 = _t3_success_terms(th, stats)
    if user is User.UE1:
        success = w1 * math.exp(-g1 / (b1 * rho)) + w2 * math.exp(
            -(g1 / (b1 * rho) + (g2 + g1 * g2) / (b2 * rho))
        )
    else:
        success = w2 * math.exp(-g2 / (b2 * rho)) + w1 * math.exp(
            -(g2 / (b2 * rho) + (g1 + g1 * g2) / (b1 * rho))
        )
    return 1.0 - success


def ul_t3_error_floor(th: SinrThresholds, stats: ChannelStats, user: User) -> float:
    """High-SNR limit of :func:`pout_ul_t3` (every exponential tends to 1).

    The floor is the probability mass of gain orderings where inter-user
    interference alone defeats the threshold; it is the same for both users.
    """
    _, _, _, _, w1, w2 = _t3_success_terms(th, stats)
    del user  # the limit is user-independent; parameter kept for symmetry
    return 1.0 - w1 - w2


def diversity_slope(
    curve: Sequence[tuple[float, float]], window: tuple[float, float]
) -> float:
    """Least-squares slope of -log10(P) against log10(rho) inside a dB window.

    A slope of d means the outage decays like rho^-d; zero indicates a floor.
    """
    lo, hi = window
    pts = [(db, p) for db, p in curve if lo <= db <= hi]
    if len(pts) < 2:
        raise ValueError(
            f"need at least 2 curve points inside window [{lo}, {hi}] dB, got {len(pts)}"
        )
    if any(p <= 0 for _, p in pts):
        raise ValueError("diversity slope undefined for non-positive probabilities")
    log_rho = np.array([db / 10.0 for db, _ in pts])  # log10 of linear SNR
    neg_log_p = np.array([-math.log10(p) for _, p in pts])
    slope, _ = np.polyfit(log_rho, neg_log_p, 1)
    return float(slope)


@dataclass(frozen=True)
class OutageSet:
    """One outage probability per logical link, with applicability tracking.

    A link's value is None when no closed form applies (or, for Monte Carlo
    built sets, when the scheme never transmits the link); each None must be
    accompanied by a reason.
    """

    p_ue1_dl: Optional[float]
    p_ue2_dl: Optional[float]
    p_ue1_ul_t2: Optional[float]
    p_ue1_ul_t3: Optional[float]
    p_ue2_ul: Optional[float]
    reasons: Mapping[str, str] = field(default_factory=dict)

    _FIELD_BY_LINK: ClassVar[Mapping[str, str]] = {
        "ue1_dl": "p_ue1_dl",
        "ue2_dl": "p_ue2_dl",
        "ue1_ul_t2": "p_ue1_ul_t2",
        "ue1_ul_t3": "p_ue1_ul_t3",
        "ue2_ul": "p_ue2_ul",
    }

    def __post_init__(self) -> None:
        for link, fname in self._FIELD_BY_LINK.items():
            value = getattr(self, fname)
            if value is None:
                if link not in self.reasons:
                    raise ValueError(f"missing applicability reason for {link}")
            elif not 0.0 <= value <= 1.0:
                raise ValueError(f"{fname} must lie in [0, 1], got {value}")

    def value(self, link: str) -> Optional[float]:
        return getattr(self, self._FIELD_BY_LINK[link])

    def applicable(self, link: str) -> bool:
        return self.value(link) is not None

    def reason(self, link: str) -> Optional[str]:
        return self.reasons.get(link)


def outage_set(
    scheme: Scheme,
    params: SystemParams,
    rho: float,
    quad: QuadratureConfig = QuadratureConfig(),
) -> OutageSet:
    """Assemble every applicable closed-form outage value for a scheme.

    Cooperative schemes share the downlink and uplink-slot forms (the
    conventional baseline with its slot-2 split forced to pure relaying);
    the non-cooperative scheme replaces the far user's downlink with its
    direct-branch-only outage and has no cooperative slot.  Links or
    regimes without a closed form come back as None with a reason.
    """
    th = params.thresholds(scheme)
    power = effective_allocation(scheme, params.power)
    stats = params.stats
    reasons: dict[str, str] = {}

    p_ue1_dl = pout_ue1_dl(power, th, rho, stats)

    if scheme is Scheme.NONCOOP_NOMA:
        try:
            _, p_ue2_dl = q1_q2(power, th, rho, stats)
        except ClosedFormUnavailable:
            p_ue2_dl = 1.0
    else:
        p_ue2_dl = pout_ue2_dl(power, th, rho, stats, quad)

    if scheme is Scheme.HDU_CNOMA:
        p_ue1_ul_t2: Optional[float] = pout_ue1_ul_t2(power, th, rho, stats)
    else:
        p_ue1_ul_t2 = None
        reasons["ue1_ul_t2"] = "scheme has no cooperative-slot uplink"

    try:
        p_ue1_ul_t3: Optional[float] = pout_ul_t3(th, rho, stats, User.UE1)
        p_ue2_ul: Optional[float] = pout_ul_t3(th, rho, stats, User.UE2)
    except ClosedFormUnavailable as exc:
        p_ue1_ul_t3 = None
        p_ue2_ul = None
        reasons["ue1_ul_t3"] = str(exc)
        reasons["ue2_ul"] = str(exc)

    return OutageSet(
        p_ue1_dl=p_ue1_dl,
        p_ue2_dl=p_ue2_dl,
        p_ue1_ul_t2=p_ue1_ul_t2,
        p_ue1_ul_t3=p_ue1_ul_t3,
        p_ue2_ul=p_ue2_ul,
        reasons=reasons,
    )


def outage_throughput(
    outages: OutageSet, rates: RateTargets, scheme: Scheme
) -> float:
    """Sum of (1 - outage) * rate over the scheme's links.

    The hybrid scheme carries the near user's uplink message in both the
    cooperative slot and the uplink slot, so that rate is earned twice when
    both get through; the baselines have four terms each.
    """
    total = 0.0
    for link in scheme.links:
        p = outages.value(link)
        if p is None:
            raise ValueError(
                f"outage value for required link {link} is not applicable: "
                f"{outages.reason(link)}"
            )
        total += (1.0 - p) * rates.rate_for(link)
    return total


def mc_outage_set(scheme: Scheme, estimates: Mapping[str, float]) -> OutageSet:
    """Wrap Monte Carlo outage estimates in an OutageSet.

    Links the scheme never transmits are marked not-applicable so the same
    throughput assembly serves both analytic and simulated values.
    """
    values: dict[str, Optional[float]] = {}
    reasons: dict[str, str] = {}
    for link in ALL_LINKS:
        if link in scheme.links:
            values[link] = float(estimates[link])
        else:
            values[link] = None
            reasons[link] = "scheme has no cooperative-slot uplink"
    return OutageSet(
        p_ue1_dl=values["ue1_dl"],
        p_ue2_dl=values["ue2_dl"],
        p_ue1_ul_t2=values["ue1_ul_t2"],
        p_ue1_ul_t3=values["ue1_ul_t3"],
        p_ue2_ul=values["ue2_ul"],
        reasons=reasons,
    )
