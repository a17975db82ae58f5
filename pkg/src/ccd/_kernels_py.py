"""Pure-Python fallback for the hot per-step loops.

Same semantics as the compiled kernels in ccd._kernels, bit for bit: both
compute the p-value from the same integer counts (strictly-greater and tied
multiplicities), so the float results agree exactly.  Selection happens in
ccd._backend; inputs are validated there.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right

import numpy as np


def conformal_pvalues(scores: np.ndarray, taus: np.ndarray) -> np.ndarray:
    out = np.empty(len(scores), dtype=np.float64)
    seen: list[float] = []
    s_list = scores.tolist()
    t_list = taus.tolist()
    for i, (s, t) in enumerate(zip(s_list, t_list)):
        lo = bisect_left(seen, s)
        hi = bisect_right(seen, s)
        seen.insert(hi, s)
        n = i + 1
        gt = n - 1 - hi
        eq = hi - lo + 1
        out[i] = (gt + t * eq) / n
    return out


def cusum_alarms(log_path: np.ndarray, log_c: float) -> np.ndarray:
    vals = log_path.tolist()
    alarms: list[int] = []
    log_min = vals[0]
    for i in range(1, len(vals)):
        v = vals[i]
        if v - log_min >= log_c:
            alarms.append(i)
            log_min = v
        elif v < log_min:
            log_min = v
    return np.asarray(alarms, dtype=np.int64)
