from __future__ import annotations

from ltebid.learning.cdf import (
    AuctionHistory,
    SplitCdfEstimate,
    estimate_cdf,
    fit_phi,
    random_split,
    ridge_floor,
    spectral_split_check,
    warm_start_rounds,
)
from ltebid.learning.uplift import (
    WlsState,
    beta_schedule,
    confidence_radius,
    ipw_pseudo_outcome,
    variance_weight,
    wls_update,
)

__all__ = [
    "AuctionHistory",
    "SplitCdfEstimate",
    "WlsState",
    "beta_schedule",
    "confidence_radius",
    "estimate_cdf",
    "fit_phi",
    "ipw_pseudo_outcome",
    "random_split",
    "ridge_floor",
    "spectral_split_check",
    "variance_weight",
    "warm_start_rounds",
    "wls_update",
]
