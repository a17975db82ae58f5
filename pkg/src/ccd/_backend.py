"""Kernel selection and input validation.

Prefers the compiled extension (ccd._kernels); falls back to the pure-Python
implementation when the extension is missing or when CCD_PURE_PYTHON is set
to a non-empty value other than 0.  Both backends produce bit-identical
results; BACKEND records which one is active.
"""
from __future__ import annotations

import os

import numpy as np

if os.environ.get("CCD_PURE_PYTHON", "0") not in ("", "0"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"


def conformal_pvalues(scores, taus) -> np.ndarray:
    """Smoothed conformal p-value of each score against all scores so far.

    p_n = (#{i <= n: s_i > s_n} + tau_n * #{i <= n: s_i == s_n}) / n, where
    the counts include the current score itself and ties are exact float
    equality.
    """
    s = np.ascontiguousarray(scores, dtype=np.float64)
    t = np.ascontiguousarray(taus, dtype=np.float64)
    if s.ndim != 1 or t.ndim != 1:
        raise ValueError("scores and taus must be one-dimensional")
    if s.shape[0] != t.shape[0]:
        raise ValueError("scores and taus must have equal length")
    if s.size and not np.isfinite(s).all():
        raise ValueError("nonconformity scores must be finite")
    if t.size and (np.min(t) < 0.0 or np.max(t) > 1.0):
        raise ValueError("tie-break draws must lie in [0, 1]")
    return _impl.conformal_pvalues(s, t)


def cusum_alarms(log_path, log_c: float) -> np.ndarray:
    """Alarm steps of the ratio-to-running-minimum rule on a log path.

    The path starts at log 1 = 0; an alarm fires at step i when
    log_path[i] - min(log_path[j] for j since the last alarm) >= log_c,
    and the minimum then restarts at the alarm value.  Boundary hits count
    as alarms.
    """
    lp = np.ascontiguousarray(log_path, dtype=np.float64)
    if lp.ndim != 1 or lp.size == 0:
        raise ValueError("log path must be a non-empty one-dimensional array")
    if lp[0] != 0.0:
        raise ValueError("log path must start at log 1 = 0")
    if not log_c > 0.0:
        raise ValueError("log threshold must be positive")
    return _impl.cusum_alarms(lp, float(log_c))
