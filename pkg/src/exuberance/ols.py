"""Windowed ADF regression engine.

The package computes one regression shape everywhere: the first difference
of the series on optional deterministic terms (intercept, intercept plus
trend), the lagged level, and ``k`` lagged differences over a window
(start, end].  Regression rows are t = start+k+2 .. end so every lag is
built from observations inside the window; nobs = end - start - k - 1.
The test statistic is the t-ratio of the lagged-level coefficient with
sigma^2 = ssr / (nobs - #params).

Three routes compute it:

* ``fit_adf_window``: dense per-window least squares (the reference).
* ``adf_tstat_pairs``: vectorized over many windows using prefix sums of
  cross moments (incremental rank-1 accumulation), an equilibrated batched
  solve, and a condition-number guard (1e12) that falls back to the dense
  route window by window.
* ``_kernels``: compiled incremental loops for the intercept-only k=0 case
  used by the sup scans; flagged windows are likewise refit densely.

When an intercept is present, windows are re-anchored by subtracting one
of their own observations before moments are formed.  The intercept
absorbs the shift, so results are unchanged while cancellation error in
the accumulators drops sharply; for integer-valued data the statistic
becomes exactly invariant to integer level shifts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import DegenerateFitError
from .series import as_values, normalize_det

__all__ = [
    "AdfFit",
    "fit_adf_window",
    "adf_stat",
    "adf_tstat_pairs",
    "sadf_prefix_stats",
    "bsadf_backward",
    "gls_adjust",
    "tstat_ar_noconst",
    "GLS_CBAR",
    "COND_LIMIT",
]

COND_LIMIT = 1.0e12

# Quasi-differencing constants for the right-tailed GLS variant.
GLS_CBAR = {"const": 1.6, "trend": 2.4}


@dataclass
class AdfFit:
    """Result of a single windowed ADF regression."""

    delta: float
    tstat: float
    se: float
    sigma2: float
    ssr: float
    nobs: int
    coeffs: np.ndarray
    columns: tuple[str, ...]
    start: int
    end: int
    det: str
    k: int


def _det_count(det: str) -> int:
    return {"none": 0, "const": 1, "trend": 2}[det]


def _min_window_len(det: str, k: int) -> int:
    """Smallest window length leaving one residual degree of freedom."""
    p = _det_count(det) + 1 + k
    return k + 1 + p + 1


def fit_adf_window(
    values,
    start: int,
    end: int,
    det: str = "const",
    k: int = 0,
) -> AdfFit:
    """Dense ADF regression on the window (start, end].

    Parameters
    ----------
    values : Series or array
        Full sample; the window picks ``values[start:end]``.
    start, end : int
        Window bounds, 0 <= start < end <= T.
    det : {'none', 'const', 'trend'}
        Deterministic terms; 'trend' means intercept plus linear trend.
    k : int
        Number of lagged differences.

    Raises
    ------
    DegenerateFitError
        If the window is too short for (det, k) or the design is rank
        deficient.
    """
    v = as_values(values)
    det = normalize_det(det)
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    T = v.size
    if not (0 <= start < end <= T):
        raise ValueError(f"invalid window ({start}, {end}] for T={T}")
    n = end - start
    if n < _min_window_len(det, k):
        raise DegenerateFitError(
            f"window length {n} too short for det={det!r}, k={k} "
            f"(needs >= {_min_window_len(det, k)})"
        )
    w = v[start:end]
    anchor = w[0] if det != "none" else 0.0
    a = w - anchor if det != "none" else w
    da = np.diff(a)
    dep = da[k:]
    nobs = dep.size
    cols: list[np.ndarray] = []
    names: list[str] = []
    if det in ("const", "trend"):
        cols.append(np.ones(nobs))
        names.append("const")
    if det == "trend":
        cols.append(np.arange(k + 2, n + 1, dtype=float) / n)
        names.append("trend")
    cols.append(a[k : n - 1])
    names.append("level")
    for j in range(1, k + 1):
        cols.append(da[k - j : n - 1 - j])
        names.append(f"dlag{j}")
    X = np.column_stack(cols)
    p = X.shape[1]
    beta, _, rank, _ = np.linalg.lstsq(X, dep, rcond=None)
    if rank < p:
        raise DegenerateFitError(
            f"rank-deficient design on window ({start}, {end}] (rank {rank} < {p})"
        )
    resid = dep - X @ beta
    ssr = float(resid @ resid)
    dof = nobs - p
    sigma2 = ssr / dof
    dpos = names.index("level")
    if sigma2 > 0:
        xtx_inv = np.linalg.inv(X.T @ X)
        se = float(np.sqrt(sigma2 * xtx_inv[dpos, dpos]))
        tstat = float(beta[dpos] / se)
    else:
        se = 0.0
        if beta[dpos] > 0:
            tstat = np.inf
        elif beta[dpos] < 0:
            tstat = -np.inf
        else:
            raise DegenerateFitError(
                f"zero-variance fit on window ({start}, {end}]"
            )
    coeffs = beta.copy()
    if det != "none":
        # map the intercept back to the un-anchored scale
        coeffs[0] = beta[0] - beta[dpos] * anchor
    return AdfFit(
        delta=float(beta[dpos]),
        tstat=tstat,
        se=se,
        sigma2=float(sigma2),
        ssr=ssr,
        nobs=nobs,
        coeffs=coeffs,
        columns=tuple(names),
        start=int(start),
        end=int(end),
        det=det,
        k=int(k),
    )


def adf_stat(values, det: str = "const", k: int = 0) -> float:
    """Full-sample ADF t-ratio (the e = T prefix window)."""
    v = as_values(values)
    return fit_adf_window(v, 0, v.size, det=det, k=k).tstat


def _dense_or_nan(v: np.ndarray, s: int, e: int, det: str, k: int) -> float:
    try:
        return fit_adf_window(v, int(s), int(e), det=det, k=k).tstat
    except DegenerateFitError:
        return np.nan


def adf_tstat_pairs(values, starts, ends, det: str = "const", k: int = 0) -> np.ndarray:
    """Vectorized ADF t-ratios for many windows (starts[i], ends[i]].

    Uses prefix-sum cross moments with an equilibrated batched solve; any
    window whose (scaled) Gram matrix has condition number above 1e12, or
    that shows cancellation in the residual sum, is recomputed densely.
    Windows that cannot support the fit yield NaN.
    """
    v = as_values(values)
    det = normalize_det(det)
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    starts = np.atleast_1d(np.asarray(starts, dtype=np.int64))
    ends = np.atleast_1d(np.asarray(ends, dtype=np.int64))
    if starts.shape != ends.shape:
        raise ValueError("starts and ends must have equal length")
    T = v.size
    if starts.size and (starts.min() < 0 or ends.max() > T or (starts >= ends).any()):
        raise ValueError("window bounds out of range")

    a = v - v[0] if det != "none" else v
    d = np.diff(a)
    ndet = _det_count(det)
    p = ndet + 1 + k
    dpos = ndet

    # Row t (1-based, valid from t = k+2) lives at slot t of length-(T+1)
    # arrays; invalid rows are zero so prefix sums skip them automatically.
    Z = np.zeros((T + 1, p))
    dep = np.zeros(T + 1)
    t_idx = np.arange(k + 2, T + 1)
    col = 0
    if det in ("const", "trend"):
        Z[t_idx, col] = 1.0
        col += 1
    if det == "trend":
        Z[t_idx, col] = t_idx / T
        col += 1
    Z[t_idx, col] = a[t_idx - 2]
    for j in range(1, k + 1):
        Z[t_idx, col + j] = d[t_idx - 2 - j]
    dep[t_idx] = d[t_idx - 2]

    PG = np.cumsum(np.einsum("ti,tj->tij", Z, Z), axis=0)
    Pb = np.cumsum(Z * dep[:, None], axis=0)
    Pdd = np.cumsum(dep * dep)

    out = np.empty(starts.size)
    chunk = 300_000
    for c0 in range(0, starts.size, chunk):
        sl = slice(c0, min(c0 + chunk, starts.size))
        s_c, e_c = starts[sl], ends[sl]
        lo = s_c + k + 1  # prefix index just before first row t = s+k+2
        G = PG[e_c] - PG[lo]
        b = Pb[e_c] - Pb[lo]
        sdd = Pdd[e_c] - Pdd[lo]
        nobs = (e_c - s_c - k - 1).astype(float)

        res = np.full(s_c.size, np.nan)
        diag = np.einsum("wii->wi", G)
        usable = (nobs >= p + 1) & (diag > 0).all(axis=1)
        dense_mask = np.zeros(s_c.size, dtype=bool)
        if usable.any():
            D = np.zeros_like(diag)
            D[usable] = 1.0 / np.sqrt(diag[usable])
            Ghat = G * D[:, None, :] * D[:, :, None]
            Ghat[~usable] = np.eye(p)
            sv = np.linalg.svd(Ghat, compute_uv=False)
            illcond = (sv[:, -1] <= 0) | (sv[:, 0] > COND_LIMIT * sv[:, -1])
            dense_mask |= illcond & usable
            solvable = usable & ~illcond
            Ghat[~solvable] = np.eye(p)
            rhs = np.zeros((s_c.size, p, 2))
            rhs[:, :, 0] = D * b
            rhs[:, dpos, 1] = 1.0
            sol = np.linalg.solve(Ghat, rhs)
            u = sol[:, :, 0]
            ginv_dd = sol[:, dpos, 1]
            ssr = sdd - np.einsum("wi,wi->w", u, D * b)
            cancel = ssr < -1e-8 * np.maximum(np.abs(sdd), 1e-300)
            dense_mask |= cancel & solvable
            ok = solvable & ~cancel
            ssr = np.clip(ssr, 0.0, None)
            with np.errstate(divide="ignore", invalid="ignore"):
                sigma2 = ssr / (nobs - p)
                beta_d = D[:, dpos] * u[:, dpos]
                var_d = sigma2 * D[:, dpos] ** 2 * ginv_dd
                tv = beta_d / np.sqrt(var_d)
            exact = ok & (sigma2 == 0)
            res[ok] = tv[ok]
            res[exact & (beta_d > 0)] = np.inf
            res[exact & (beta_d < 0)] = -np.inf
            res[exact & (beta_d == 0)] = np.nan
            bad_var = ok & ~exact & ~(var_d > 0)
            dense_mask |= bad_var
        for i in np.flatnonzero(dense_mask):
            res[i] = _dense_or_nan(v, s_c[i], e_c[i], det, k)
        out[sl] = res
    return out


def sadf_prefix_stats(values, m0: int, det: str = "const", k: int = 0) -> np.ndarray:
    """ADF t-ratios on prefix windows (0, e], e = m0..T.

    Returns a length-(T+1) array indexed by e; entries below m0 are NaN,
    degenerate windows stay NaN.
    """
    v = as_values(values)
    det = normalize_det(det)
    T = v.size
    m0 = int(m0)
    if not 2 <= m0 <= T:
        raise ValueError(f"minimum window {m0} out of range for T={T}")
    if det == "const" and k == 0 and _kernels.HAVE_NUMBA:
        stats, flags = _kernels.sadf_prefix_const_k0(v, m0)
        for e in np.flatnonzero(flags == 2):
            stats[e] = _dense_or_nan(v, 0, int(e), det, k)
        return stats
    ends = np.arange(m0, T + 1, dtype=np.int64)
    vals = adf_tstat_pairs(v, np.zeros_like(ends), ends, det=det, k=k)
    out = np.full(T + 1, np.nan)
    out[m0:] = vals
    return out


def bsadf_backward(
    values,
    m0: int,
    det: str = "const",
    k: int = 0,
    want_matrix: bool = False,
):
    """Backward sup scan: for each e in [m0, T], sup over s in [0, e-m0].

    Returns ``(maxvals, argmax_s, tmat)`` where ``maxvals[e]`` is the sup
    of the window statistic over admissible starts (NaN when every window
    is degenerate), ``argmax_s[e]`` the smallest attaining start, and
    ``tmat`` the full (T+1, T+1) statistic matrix if requested else None.
    """
    v = as_values(values)
    det = normalize_det(det)
    T = v.size
    m0 = int(m0)
    if not 2 <= m0 <= T:
        raise ValueError(f"minimum window {m0} out of range for T={T}")

    if det == "const" and k == 0 and _kernels.HAVE_NUMBA:
        maxvals, argmax_s, nflags, tmat, _f = _kernels.bsadf_scan_const_k0(
            v, m0, want_matrix
        )
        if nflags == 0 and not want_matrix:
            return maxvals, argmax_s, None
        if nflags == 0 and want_matrix:
            return maxvals, argmax_s, tmat
        # some windows need a dense refit: redo with the full matrix
        maxvals, argmax_s, _n, tmat, fmat = _kernels.bsadf_scan_const_k0(v, m0, True)
        for e, s in zip(*np.nonzero(fmat == 2)):
            tmat[e, s] = _dense_or_nan(v, int(s), int(e), det, k)
        maxvals, argmax_s = _rowwise_max(tmat, m0, T)
        return maxvals, argmax_s, (tmat if want_matrix else None)

    # generic route: flat pair enumeration
    ends_list = []
    starts_list = []
    for e in range(m0, T + 1):
        s_arr = np.arange(0, e - m0 + 1, dtype=np.int64)
        starts_list.append(s_arr)
        ends_list.append(np.full(s_arr.size, e, dtype=np.int64))
    starts = np.concatenate(starts_list)
    ends = np.concatenate(ends_list)
    vals = adf_tstat_pairs(v, starts, ends, det=det, k=k)
    tmat = np.full((T + 1, T + 1), np.nan)
    tmat[ends, starts] = vals
    maxvals, argmax_s = _rowwise_max(tmat, m0, T)
    return maxvals, argmax_s, (tmat if want_matrix else None)


def _rowwise_max(tmat: np.ndarray, m0: int, T: int):
    maxvals = np.full(T + 1, np.nan)
    argmax_s = np.full(T + 1, -1, dtype=np.int64)
    for e in range(m0, T + 1):
        row = tmat[e, : e - m0 + 1]
        finite = ~np.isnan(row)
        if not finite.any():
            continue
        filled = np.where(finite, row, -np.inf)
        m = filled.max()
        maxvals[e] = m
        argmax_s[e] = int(np.flatnonzero(filled == m)[0])
    return maxvals, argmax_s


def gls_adjust(values, det: str = "const", c_bar: float | None = None) -> np.ndarray:
    """Quasi-difference detrending residuals for the GLS test variant.

    The series and the deterministic terms are quasi-differenced with
    rho_bar = 1 + c_bar/n (n = sample length; c_bar defaults to 1.6 with an
    intercept, 2.4 with a trend), the detrending coefficients are estimated
    on the transformed sample, and the residuals y - z'theta are returned.
    """
    v = as_values(values)
    det = normalize_det(det)
    if det == "none":
        raise ValueError("GLS adjustment needs deterministic terms ('const' or 'trend')")
    n = v.size
    p = _det_count(det)
    if n < p + 1:
        raise DegenerateFitError(f"sample of {n} too short for GLS det={det!r}")
    if c_bar is None:
        c_bar = GLS_CBAR[det]
    rho = 1.0 + c_bar / n
    if det == "const":
        Z = np.ones((n, 1))
    else:
        Z = np.column_stack([np.ones(n), np.arange(1, n + 1, dtype=float)])
    ya = np.concatenate([v[:1], v[1:] - rho * v[:-1]])
    Za = np.vstack([Z[:1], Z[1:] - rho * Z[:-1]])
    theta, _, rank, _ = np.linalg.lstsq(Za, ya, rcond=None)
    if rank < Z.shape[1]:
        raise DegenerateFitError("rank-deficient quasi-differenced deterministics")
    return v - Z @ theta


def tstat_ar_noconst(u: np.ndarray) -> float:
    """t-ratio of delta in du_t = delta*u_{t-1} + e_t (no deterministics).

    sigma^2 = ssr/(nobs - 1); raises on zero lagged sum of squares or
    missing degrees of freedom.
    """
    u = np.asarray(u, dtype=float)
    if u.size < 3:
        raise DegenerateFitError("need at least 3 observations")
    du = np.diff(u)
    x = u[:-1]
    sxx = float(x @ x)
    if not sxx > 0:
        raise DegenerateFitError("zero lagged sum of squares")
    delta = float(x @ du) / sxx
    resid = du - delta * x
    ssr = float(resid @ resid)
    sigma2 = ssr / (du.size - 1)
    if sigma2 == 0:
        if delta == 0:
            raise DegenerateFitError("zero-variance fit")
        return np.inf if delta > 0 else -np.inf
    return delta / np.sqrt(sigma2 / sxx)
