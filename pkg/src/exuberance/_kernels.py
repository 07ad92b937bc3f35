"""JIT-compiled scan kernels for the intercept-only, zero-lag ADF case.

This is the hot path of every sup-type scan and every bootstrap replicate,
so it runs as a compiled loop with incremental cross-moment accumulators:
extending a window by one observation is a rank-1 update of the running
sums, never a refit.  Windows are re-anchored at their final observation
(a no-op for an intercept regression) to keep the accumulators well
conditioned.

Each statistic carries a flag:
  0  computed
  1  degenerate (rank deficient / no dof; dense refit cannot help)
  2  ill-conditioned or cancellation detected; caller must refit densely

If numba is unavailable the pure-Python versions still work (slowly); the
generic vectorized path in `ols` is then preferred by the dispatcher.
"""

from __future__ import annotations

import math

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


_COND_LIMIT = 1.0e12


@njit(cache=True)
def _tstat_from_sums(n, sx, sxx, sd, sdd, sxd):
    """t-ratio of the slope in d ~ 1 + x from raw cross moments.

    Returns (tstat, flag); see module docstring for flag codes.
    """
    if n < 3.0:
        return np.nan, 1
    if not sxx > 0.0:
        return np.nan, 1
    gbar2 = (sx * sx) / (n * sxx)
    if gbar2 >= 1.0:
        return np.nan, 2
    gbar = math.sqrt(gbar2)
    if (1.0 - gbar) * _COND_LIMIT < (1.0 + gbar):
        return np.nan, 2
    mxx = sxx - sx * sx / n
    if not mxx > 0.0:
        return np.nan, 2
    mxd = sxd - sx * sd / n
    mdd = sdd - sd * sd / n
    if mdd < 0.0:
        mdd = 0.0
    delta = mxd / mxx
    ssr = mdd - delta * mxd
    if ssr < -1.0e-8 * (mdd + 1.0e-300):
        return np.nan, 2
    if ssr < 0.0:
        ssr = 0.0
    sigma2 = ssr / (n - 2.0)
    if sigma2 == 0.0:
        if delta > 0.0:
            return np.inf, 0
        if delta < 0.0:
            return -np.inf, 0
        return np.nan, 1
    return delta / math.sqrt(sigma2 / mxx), 0


@njit(cache=True)
def sadf_prefix_const_k0(y, m0):
    """ADF t-stats on prefix windows (0, e] for e = m0..T.

    Returns (stats, flags), both length T+1 and indexed by e; entries below
    m0 are NaN / 0.
    """
    T = y.shape[0]
    stats = np.full(T + 1, np.nan)
    flags = np.zeros(T + 1, dtype=np.uint8)
    anchor = y[0]
    n = 0.0
    sx = 0.0
    sxx = 0.0
    sd = 0.0
    sdd = 0.0
    sxd = 0.0
    for e in range(2, T + 1):
        x = y[e - 2] - anchor
        d = y[e - 1] - y[e - 2]
        n += 1.0
        sx += x
        sxx += x * x
        sd += d
        sdd += d * d
        sxd += x * d
        if e >= m0:
            t, f = _tstat_from_sums(n, sx, sxx, sd, sdd, sxd)
            stats[e] = t
            flags[e] = f
    return stats, flags


@njit(cache=True)
def bsadf_scan_const_k0(y, m0, want_matrix):
    """Backward sup scan over windows (s, e], e = m0..T, s = 0..e-m0.

    For each e the start index runs downward so the accumulators only ever
    grow.  Returns (maxvals, argmax_s, nflags, tmat, fmat); maxvals[e] is
    the sup over admissible s (NaN if every window was degenerate) and
    argmax_s[e] the smallest attaining start.  tmat/fmat have shape
    (T+1, T+1) when requested, else (1, 1).
    """
    T = y.shape[0]
    maxvals = np.full(T + 1, np.nan)
    argmax_s = np.full(T + 1, -1, dtype=np.int64)
    if want_matrix:
        tmat = np.full((T + 1, T + 1), np.nan)
        fmat = np.zeros((T + 1, T + 1), dtype=np.uint8)
    else:
        tmat = np.full((1, 1), np.nan)
        fmat = np.zeros((1, 1), dtype=np.uint8)
    nflags = 0
    for e in range(m0, T + 1):
        anchor = y[e - 1]
        n = 0.0
        sx = 0.0
        sxx = 0.0
        sd = 0.0
        sdd = 0.0
        sxd = 0.0
        s = e - m0
        # rows t = s+2..e enter the accumulators before the first stat
        for t in range(s + 2, e + 1):
            x = y[t - 2] - anchor
            d = y[t - 1] - y[t - 2]
            n += 1.0
            sx += x
            sxx += x * x
            sd += d
            sdd += d * d
            sxd += x * d
        best = np.nan
        bests = -1
        while True:
            t_stat, f = _tstat_from_sums(n, sx, sxx, sd, sdd, sxd)
            if want_matrix:
                tmat[e, s] = t_stat
                fmat[e, s] = f
            if f == 2:
                nflags += 1
            if not np.isnan(t_stat):
                if np.isnan(best) or t_stat >= best:
                    best = t_stat
                    bests = s
            if s == 0:
                break
            s -= 1
            x = y[s] - anchor  # new row t = s+2 uses level y[t-2] = y[s]
            d = y[s + 1] - y[s]
            n += 1.0
            sx += x
            sxx += x * x
            sd += d
            sdd += d * d
            sxd += x * d
        maxvals[e] = best
        argmax_s[e] = bests
    return maxvals, argmax_s, nflags, tmat, fmat
