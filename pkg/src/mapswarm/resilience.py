"""Recovery statistics over a metrics time series."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import CONNECTIVITY_TOL
from .simulation import MetricsRecord

PRE_WINDOW = 2.0
FINAL_WINDOW = 1.0


@dataclass(frozen=True)
class RecoveryStats:
    pre_coverage: float
    post_min_coverage: float
    recovered_coverage: float
    recovery_ratio: float
    pre_epidemic: float
    recovered_epidemic: float
    epidemic_recovery_ratio: float
    final_fiedler: float
    final_connected: bool


def recovery_stats(records: list[MetricsRecord], failure_time: float,
                   pre_window: float = PRE_WINDOW, final_window: float = FINAL_WINDOW) -> RecoveryStats:
    """Compare the window before ``failure_time`` with the final window of the run.

    "pre" averages records with t in [failure_time - pre_window, failure_time);
    "recovered" averages the last ``final_window`` seconds.
    """
    if not records:
        raise ValueError("no records")
    t = np.array([r.t for r in records])
    cov = np.array([r.coverage for r in records])
    eb = np.array([r.mean_epidemic_bound for r in records])
    pre = (t >= failure_time - pre_window - 1e-9) & (t < failure_time - 1e-9)
    final = t >= t[-1] - final_window - 1e-9
    after = t >= failure_time - 1e-9
    if not pre.any() or not after.any():
        raise ValueError("failure time outside the recorded horizon")
    pre_cov, rec_cov = cov[pre].mean(), cov[final].mean()
    pre_eb, rec_eb = eb[pre].mean(), eb[final].mean()
    return RecoveryStats(
        pre_coverage=float(pre_cov),
        post_min_coverage=float(cov[after].min()),
        recovered_coverage=float(rec_cov),
        recovery_ratio=float(rec_cov / pre_cov) if pre_cov > 0 else float("nan"),
        pre_epidemic=float(pre_eb),
        recovered_epidemic=float(rec_eb),
        epidemic_recovery_ratio=float(rec_eb / pre_eb) if pre_eb > 0 else float("nan"),
        final_fiedler=records[-1].fiedler,
        final_connected=records[-1].fiedler > CONNECTIVITY_TOL,
    )
