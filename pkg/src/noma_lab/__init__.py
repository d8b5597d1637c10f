"""Link-level simulator and analytical evaluator for a three-slot hybrid
downlink-uplink cooperative NOMA system, with two baselines (conventional
cooperative NOMA and non-cooperative NOMA) for comparison."""

from .channel import (
    ChannelRealization,
    ChannelStats,
    LinkId,
    db_to_linear,
    gain_cdf,
    gain_pdf,
    linear_to_db,
    sample_gains,
    sample_realization,
    substream,
)
from .schemes import (
    ALL_LINKS,
    FrameOutcome,
    PowerAllocation,
    RateTargets,
    Scheme,
    SinrThresholds,
    SystemParams,
    User,
    effective_allocation,
    evaluate_frame,
    evaluate_frames,
    mrc_sinr,
    sinr_t1,
    sinr_t2,
    sinr_t3,
)
from .analysis import (
    ClosedFormUnavailable,
    DerivedConstants,
    OutageSet,
    QuadratureConfig,
    QuadratureError,
    derived_constants,
    diversity_slope,
    outage_set,
    outage_throughput,
    pout_ue1_dl,
    pout_ue1_ul_t2,
    pout_ue2_dl,
    pout_ul_t3,
    q1_q2,
    q3_gauss_chebyshev,
    q3_numeric_oracle,
    ul_t3_error_floor,
)
from .montecarlo import (
    LinkEstimate,
    OutagePoint,
    PartialResultError,
    SweepResult,
    SweepSpec,
    resolve_workers,
    run_sweep,
    wilson_interval,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_LINKS",
    "ChannelRealization",
    "ChannelStats",
    "ClosedFormUnavailable",
    "DerivedConstants",
    "FrameOutcome",
    "LinkEstimate",
    "LinkId",
    "OutagePoint",
    "OutageSet",
    "PartialResultError",
    "PowerAllocation",
    "QuadratureConfig",
    "QuadratureError",
    "RateTargets",
    "Scheme",
    "SinrThresholds",
    "SweepResult",
    "SweepSpec",
    "SystemParams",
    "User",
    "db_to_linear",
    "derived_constants",
    "diversity_slope",
    "effective_allocation",
    "evaluate_frame",
    "evaluate_frames",
    "gain_cdf",
    "gain_pdf",
    "linear_to_db",
    "mrc_sinr",
    "outage_set",
    "outage_throughput",
    "pout_ue1_dl",
    "pout_ue1_ul_t2",
    "pout_ue2_dl",
    "pout_ul_t3",
    "q1_q2",
    "q3_gauss_chebyshev",
    "q3_numeric_oracle",
    "resolve_workers",
    "run_sweep",
    "sample_gains",
    "sample_realization",
    "sinr_t1",
    "sinr_t2",
    "sinr_t3",
    "substream",
    "ul_t3_error_floor",
    "wilson_interval",
    "__version__",
]
