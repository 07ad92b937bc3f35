"""Wild-bootstrap p-values, composite monitoring critical values, and
subsampling calibration for explosive-root test statistics.

The wild bootstrap regenerates the series under the unit-root null by
cumulating multiplier-scaled first differences, so the replicate
distribution inherits the observed heteroskedasticity pattern.  All
replicate streams are pure functions of ``(seed, replicate_index)``:
running replicates serially, in any order, or in parallel produces
bitwise-identical draws.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import ols, recursive, robust
from .exceptions import DegenerateFitError
from .recursive import _resolve_tau0
from .series import as_values

__all__ = [
    "MULTIPLIERS",
    "STATISTICS",
    "MIN_REPLICATIONS",
    "MAX_DEGENERATE_SHARE",
    "DEFAULT_MONITOR_SPAN",
    "multiplier_draws",
    "replicate_rng",
    "BootstrapReport",
    "wild_bootstrap_pvalue",
    "CompositeCvReport",
    "composite_monitor_cv",
    "bsadf_window_max",
    "SubsamplingCv",
    "subsampling_cv",
    "BootstrapUnionReport",
    "bootstrap_union",
]

MULTIPLIERS = ("gaussian", "rademacher", "skewed")

#: Smallest replication count accepted for p-value computation.
MIN_REPLICATIONS = 99

#: Raise once more than this share of replicates fails to produce a statistic.
MAX_DEGENERATE_SHARE = 0.10

#: Default length of the monitoring control window (two years of monthly data).
DEFAULT_MONITOR_SPAN = 24


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        return int(np.random.SeedSequence().entropy)
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer or None, got {seed!r}")
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return int(seed)


def replicate_rng(seed: int, r: int) -> np.random.Generator:
    """Independent generator for replicate r, derived from the base seed.

    Spawn keys make the stream a pure function of ``(seed, r)``, so the
    replicate set does not depend on execution order.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))


def multiplier_draws(rng: np.random.Generator, n: int, kind: str = "gaussian") -> np.ndarray:
    """Draw n bootstrap multipliers with mean 0 and variance 1.

    ``skewed`` combines two independent normals as u/sqrt(2) + (v^2-1)/2,
    which additionally has third central moment 1 and so preserves
    asymmetry of the resampled increments.
    """
    if kind == "gaussian":
        return rng.standard_normal(n)
    if kind == "rademacher":
        return rng.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0
    if kind == "skewed":
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        return u / np.sqrt(2.0) + (v * v - 1.0) / 2.0
    raise ValueError(f"unknown multiplier kind {kind!r}; choose from {MULTIPLIERS}")


def _stat_sadf(v, tau0, det, k):
    return recursive.sadf(v, tau0=tau0, det=det, k=k).value


def _stat_gsadf(v, tau0, det, k):
    return recursive.gsadf(v, tau0=tau0, det=det, k=k).value


def _stat_hb_chow(v, tau0, det, k):
    return recursive.hb_sup_chow(v, tau0=tau0, k=k).value


def _stat_sadf_gls(v, tau0, det, k):
    return recursive.sadf_gls(v, tau0=tau0, det=det).value


def _stat_sbz(v, tau0, det, k):
    return robust.sbz(v, tau0=tau0).value


def _stat_sign_sadf(v, tau0, det, k):
    return robust.sign_statistics(v, tau0=tau0, filter_lags=k).ssadf.value


def _stat_sign_gsadf(v, tau0, det, k):
    return robust.sign_statistics(v, tau0=tau0, filter_lags=k).sgsadf.value


def _stat_stadf(v, tau0, det, k):
    return robust.time_transformed_tests(v, tau0=tau0).stadf.value


def _stat_gstadf(v, tau0, det, k):
    return robust.time_transformed_tests(v, tau0=tau0).gstadf.value


_STATISTICS = {
    "sadf": _stat_sadf,
    "gsadf": _stat_gsadf,
    "hb_chow": _stat_hb_chow,
    "sadf_gls": _stat_sadf_gls,
    "sbz": _stat_sbz,
    "sign_sadf": _stat_sign_sadf,
    "sign_gsadf": _stat_sign_gsadf,
    "stadf": _stat_stadf,
    "gstadf": _stat_gstadf,
}

#: Statistic names accepted by the bootstrap entry points (and the CLI).
STATISTICS = tuple(sorted(_STATISTICS))


def _statistic_fn(statistic):
    """Map a statistic name or callable to fn(values, tau0, det, k) -> float.

    Named statistics follow the package convention: the observed value may
    use the caller's lag order k, while replicates are always evaluated at
    k = 0.  A custom callable receives only the series values and is used
    verbatim on both sides.
    """
    if callable(statistic):
        name = getattr(statistic, "__name__", "custom")

        def fn(v, tau0, det, k):
            return float(statistic(v))

        return name, fn
    key = str(statistic).strip().lower()
    if key not in _STATISTICS:
        raise ValueError(
            f"unknown statistic {statistic!r}; choose from {STATISTICS} or pass a callable"
        )
    return key, _STATISTICS[key]


def _null_resample(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Build one wild-bootstrap series: y*_1 = 0, y*_t = sum_{i<=t} w_i dy_i."""
    ystar = np.empty(v.size)
    ystar[0] = 0.0
    np.cumsum(w * np.diff(v), out=ystar[1:])
    return ystar


@dataclass
class BootstrapReport:
    """Observed statistic, replicate distribution, and bootstrap p-value.

    The p-value convention (1 + #{replicates >= observed}) / (B + 1) never
    returns 0 and is exact at conventional levels when (B + 1) * level is
    an integer.  Degenerate replicates (statistic undefined on the
    resampled series) count as non-exceeding and are reported.
    """

    statistic: str
    observed: float
    p_value: float
    B: int
    seed: int
    multiplier: str
    n_degenerate: int
    replicates: np.ndarray = field(repr=False)

    def dump_replicates(self, path: str) -> None:
        """Write the replicate values to CSV (blank cell for degenerate)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replicate", "value"])
            for i, val in enumerate(self.replicates):
                w.writerow([i, "" if np.isnan(val) else format(val, ".17g")])


def _degenerate_guard(n_bad: int, B: int, what: str) -> None:
    if n_bad > MAX_DEGENERATE_SHARE * B:
        raise DegenerateFitError(
            f"{n_bad} of {B} bootstrap replicates left the {what} undefined "
            f"(limit {MAX_DEGENERATE_SHARE:.0%}); the series is too short or "
            "too nearly constant for resampling"
        )


def wild_bootstrap_pvalue(
    series,
    statistic="gsadf",
    tau0: float | None = None,
    B: int = 499,
    multiplier: str = "gaussian",
    seed: int | None = None,
    det: str = "const",
    k: int = 0,
) -> BootstrapReport:
    """Wild-bootstrap p-value for a sup-type explosive-root statistic.

    Each replicate multiplies the observed first differences by an IID
    mean-zero, unit-variance draw and cumulates from zero, which enforces
    the unit-root null while reproducing the volatility pattern of the
    data.  Replicate statistics use lag order 0 regardless of ``k``; the
    observed statistic uses ``k`` as given.

    Parameters
    ----------
    series : Series or array-like
        Observed sample path.
    statistic : str or callable
        One of ``STATISTICS``, or a callable mapping values to a float.
    tau0 : float, optional
        Minimum window fraction shared by observed and replicate scans.
    B : int
        Number of replicates, at least ``MIN_REPLICATIONS``.
    multiplier : str
        ``gaussian`` (default), ``rademacher``, or ``skewed``.
    seed : int, optional
        Base seed; drawn fresh (and reported) when omitted.
    det, k : str, int
        Deterministic term and lag order for the observed statistic.
    """
    v = as_values(series)
    if B < MIN_REPLICATIONS:
        raise ValueError(f"B must be >= {MIN_REPLICATIONS}, got {B}")
    if multiplier not in MULTIPLIERS:
        raise ValueError(f"unknown multiplier kind {multiplier!r}; choose from {MULTIPLIERS}")
    name, fn = _statistic_fn(statistic)
    seed = _resolve_seed(seed)
    observed = float(fn(v, tau0, det, k))
    if np.isnan(observed):
        raise DegenerateFitError(f"observed {name} statistic is undefined on this series")

    replicates = np.full(B, np.nan)
    for r in range(B):
        rng = replicate_rng(seed, r)
        w = multiplier_draws(rng, v.size - 1, multiplier)
        try:
            replicates[r] = fn(_null_resample(v, w), tau0, det, 0)
        except DegenerateFitError:
            pass
    n_bad = int(np.isnan(replicates).sum())
    _degenerate_guard(n_bad, B, f"{name} statistic")
    count = int(np.sum(replicates >= observed))
    return BootstrapReport(
        statistic=name,
        observed=observed,
        p_value=(1 + count) / (B + 1),
        B=B,
        seed=seed,
        multiplier=multiplier,
        n_degenerate=n_bad,
        replicates=replicates,
    )


@dataclass
class CompositeCvReport:
    """Critical value for the running max of backward sup statistics.

    ``window`` is the inclusive 1-based range of window endpoints that the
    maximum controls; a monitoring rule rejects when any backward sup
    statistic inside it exceeds ``critical_value``, so the family-wise
    error rate over the whole window is held at ``1 - level``.
    """

    critical_value: float
    level: float
    window: tuple[int, int]
    tau0: float
    span: int
    B: int
    seed: int
    multiplier: str
    lag_coeffs: np.ndarray
    n_degenerate: int
    replicate_max: np.ndarray = field(repr=False)


def composite_monitor_cv(
    series,
    tau0: float | None = None,
    span: int = DEFAULT_MONITOR_SPAN,
    B: int = 199,
    level: float = 0.95,
    k: int = 0,
    det: str = "const",
    multiplier: str = "gaussian",
    seed: int | None = None,
) -> CompositeCvReport:
    """Composite bootstrap critical value for a monitoring window.

    The null model is fitted once on the full provided sample: the first
    differences are regressed on an intercept and their own ``k`` lags
    (no level term, imposing a unit root), giving lag coefficients and
    residuals.  Each replicate rebuilds the path over observations
    1 .. m0 + span - 1 with the fitted lag recursion driven by
    multiplier-scaled residuals at the matching time indices, starting
    from the observed first k + 1 values; the replicate statistic is the
    maximum backward sup statistic over window endpoints m0 .. m0 + span
    - 1 and the critical value is its ``level`` quantile.

    Replicate scans use lag order 0; the fitted lag dynamics enter only
    through the resampling recursion.
    """
    v = as_values(series)
    n = v.size
    if span < 1:
        raise ValueError(f"monitor span must be >= 1, got {span}")
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    if not 0.0 < level <= 1.0:
        raise ValueError(f"level must lie in (0, 1], got {level}")
    if multiplier not in MULTIPLIERS:
        raise ValueError(f"unknown multiplier kind {multiplier!r}; choose from {MULTIPLIERS}")
    if k < 0:
        raise ValueError(f"lag order k must be >= 0, got {k}")
    tau0, m0 = _resolve_tau0(n, tau0)
    end = m0 + span - 1
    if end > n:
        raise ValueError(
            f"sample of length {n} is too short: the control window ends at "
            f"observation {end} and residuals only reach {n}"
        )
    seed = _resolve_seed(seed)

    # Null regression on the full sample: dy_t on [1, dy_{t-1..t-k}].
    dy = np.diff(v)
    rows = np.arange(k, n - 1)
    if rows.size < k + 2:
        raise DegenerateFitError(
            f"need at least {k + 3} observations to fit the lag-{k} null model, got {n}"
        )
    X = np.ones((rows.size, k + 1))
    for j in range(1, k + 1):
        X[:, j] = dy[rows - j]
    beta, _, rank, _ = np.linalg.lstsq(X, dy[rows], rcond=None)
    if rank < k + 1:
        raise DegenerateFitError("null lag regression is rank deficient")
    phi = beta[1:]
    resid = dy[rows] - X @ beta
    # resid[i] belongs to time index t = k + 2 + i; the recursion consumes
    # residuals at the same indices up to the window end.
    e_used = resid[: end - k - 1]

    replicate_max = np.full(B, np.nan)
    for r in range(B):
        rng = replicate_rng(seed, r)
        w = multiplier_draws(rng, e_used.size, multiplier)
        dystar = np.empty(end - 1)
        dystar[:k] = dy[:k]
        if k == 0:
            dystar[:] = w * e_used
        else:
            shocks = w * e_used
            for t in range(k, end - 1):
                acc = shocks[t - k]
                for j in range(1, k + 1):
                    acc += phi[j - 1] * dystar[t - j]
                dystar[t] = acc
        ystar = np.empty(end)
        ystar[0] = v[0]
        np.cumsum(dystar, out=ystar[1:])
        ystar[1:] += v[0]
        try:
            maxvals, _, _ = ols.bsadf_backward(ystar, m0, det=det, k=0)
        except DegenerateFitError:
            continue
        vals = maxvals[m0:]
        if np.any(~np.isnan(vals)):
            replicate_max[r] = np.nanmax(vals)
    n_bad = int(np.isnan(replicate_max).sum())
    _degenerate_guard(n_bad, B, "windowed backward sup statistic")
    cv = float(np.nanquantile(replicate_max, level, method="higher"))
    return CompositeCvReport(
        critical_value=cv,
        level=level,
        window=(m0, end),
        tau0=tau0,
        span=span,
        B=B,
        seed=seed,
        multiplier=multiplier,
        lag_coeffs=phi,
        n_degenerate=n_bad,
        replicate_max=replicate_max,
    )


def bsadf_window_max(
    series,
    tau0: float | None = None,
    span: int = DEFAULT_MONITOR_SPAN,
    det: str = "const",
    k: int = 0,
) -> float:
    """Maximum backward sup statistic over the monitoring control window.

    Companion to :func:`composite_monitor_cv`: computed on the observed
    series with the same window convention, so the monitoring decision is
    ``bsadf_window_max(...) > report.critical_value``.
    """
    v = as_values(series)
    n = v.size
    if span < 1:
        raise ValueError(f"monitor span must be >= 1, got {span}")
    tau0, m0 = _resolve_tau0(n, tau0)
    end = m0 + span - 1
    if end > n:
        raise ValueError(
            f"sample of length {n} is too short for a window ending at {end}"
        )
    maxvals, _, _ = ols.bsadf_backward(v[:end], m0, det=det, k=k)
    vals = maxvals[m0:]
    if np.all(np.isnan(vals)):
        raise DegenerateFitError("no window in the monitoring range is estimable")
    return float(np.nanmax(vals))


@dataclass
class SubsamplingCv:
    """Empirical subsample quantiles for the end-of-sample statistics.

    ``cv_sw`` is the quantile over non-degenerate subsamples only (the
    studentised ratio is undefined on flat windows); ``warning`` is set
    when fewer than 20 subsamples are available.
    """

    cv_s: float
    cv_r: float
    cv_sw: float
    m: int
    quantile: float
    n_subsamples: int
    warning: str | None
    subsample_s: np.ndarray = field(repr=False)
    subsample_r: np.ndarray = field(repr=False)
    subsample_sw: np.ndarray = field(repr=False)


def subsampling_cv(training, m: int = 10, quantile: float = 0.95) -> SubsamplingCv:
    """Slide the m-window over a training span and take statistic quantiles.

    The anchors run over every position the window fits, giving the
    reference distribution used to calibrate end-of-sample tests; with
    ``quantile=1.0`` the critical values are the subsample maxima.
    """
    v = as_values(training)
    n = v.size
    if m < 2:
        raise ValueError(f"window length m must be >= 2, got {m}")
    if n < 2 * m:
        raise ValueError(f"training span {n} must be at least 2m = {2 * m}")
    if not 0.0 < quantile <= 1.0:
        raise ValueError(f"quantile must lie in (0, 1], got {quantile}")
    report = recursive.end_of_sample_stats(v, m=m, training_span=n)
    sub = report.training
    s_vals = np.array([t.s for t in sub])
    r_vals = np.array([t.r for t in sub])
    sw_vals = np.array([t.s_w for t in sub])
    warning = None
    if len(sub) < 20:
        warning = (
            f"only {len(sub)} subsamples available; quantile estimates are coarse"
        )
    sw_ok = sw_vals[~np.isnan(sw_vals)]
    return SubsamplingCv(
        cv_s=float(np.quantile(s_vals, quantile)),
        cv_r=float(np.quantile(r_vals, quantile)),
        cv_sw=float(np.quantile(sw_ok, quantile)) if sw_ok.size else np.nan,
        m=m,
        quantile=quantile,
        n_subsamples=len(sub),
        warning=warning,
        subsample_s=s_vals,
        subsample_r=r_vals,
        subsample_sw=sw_vals,
    )


@dataclass
class BootstrapUnionReport:
    """Union-of-rejections decision calibrated on one replicate set.

    Member critical values and the union scale come from the same
    replicates: each replicate contributes its maximum cv-normalized
    statistic, and the union rejects when the observed normalized maximum
    exceeds the ``level`` quantile ``psi`` of those maxima.  Normalizing
    by the member critical values makes the rule symmetric, so it does
    not depend on the order the tests are listed.
    """

    reject: bool
    union_stat: float
    psi: float
    members: tuple[str, ...]
    observed: np.ndarray
    member_cvs: np.ndarray
    level: float
    B: int
    seed: int
    multiplier: str
    n_degenerate: np.ndarray
    replicates: np.ndarray = field(repr=False)


def bootstrap_union(
    series,
    tests=("sadf", "sbz"),
    tau0: float | None = None,
    B: int = 499,
    level: float = 0.95,
    multiplier: str = "gaussian",
    seed: int | None = None,
    det: str = "const",
    k: int = 0,
) -> BootstrapUnionReport:
    """Wild-bootstrap union of rejections across several sup tests.

    All member statistics are evaluated on the same resampled series, so
    their dependence under the null is preserved; a single-member union
    reduces to that member's bootstrap test at the same level.
    """
    v = as_values(series)
    if B < MIN_REPLICATIONS:
        raise ValueError(f"B must be >= {MIN_REPLICATIONS}, got {B}")
    if not 0.0 < level <= 1.0:
        raise ValueError(f"level must lie in (0, 1], got {level}")
    if multiplier not in MULTIPLIERS:
        raise ValueError(f"unknown multiplier kind {multiplier!r}; choose from {MULTIPLIERS}")
    if callable(tests) or isinstance(tests, str):
        tests = (tests,)
    resolved = [_statistic_fn(t) for t in tests]
    if not resolved:
        raise ValueError("union needs at least one member test")
    names = tuple(name for name, _ in resolved)
    seed = _resolve_seed(seed)

    observed = np.array([float(fn(v, tau0, det, k)) for _, fn in resolved])
    if np.any(np.isnan(observed)):
        bad = [n for n, o in zip(names, observed) if np.isnan(o)]
        raise DegenerateFitError(f"observed statistic undefined for union members {bad}")
    M = len(resolved)
    replicates = np.full((B, M), np.nan)
    for r in range(B):
        rng = replicate_rng(seed, r)
        w = multiplier_draws(rng, v.size - 1, multiplier)
        ystar = _null_resample(v, w)
        for mi, (_, fn) in enumerate(resolved):
            try:
                replicates[r, mi] = fn(ystar, tau0, det, 0)
            except DegenerateFitError:
                pass
    n_degenerate = np.isnan(replicates).sum(axis=0).astype(np.int64)
    for mi, name in enumerate(names):
        _degenerate_guard(int(n_degenerate[mi]), B, f"{name} statistic")

    member_cvs = np.nanquantile(replicates, level, axis=0, method="higher")
    if not np.all(np.isfinite(member_cvs)) or np.any(member_cvs <= 0):
        raise ValueError(
            "member bootstrap critical values must be finite and positive to "
            f"scale the union; got {member_cvs}"
        )
    with np.errstate(invalid="ignore"):
        norm = replicates / member_cvs
    union_draws = np.full(B, np.nan)
    any_ok = np.any(~np.isnan(norm), axis=1)
    union_draws[any_ok] = np.nanmax(norm[any_ok], axis=1)
    psi = float(np.nanquantile(union_draws, level, method="higher"))
    union_stat = float(np.max(observed / member_cvs))
    return BootstrapUnionReport(
        reject=bool(union_stat > psi),
        union_stat=union_stat,
        psi=psi,
        members=names,
        observed=observed,
        member_cvs=member_cvs,
        level=level,
        B=B,
        seed=seed,
        multiplier=multiplier,
        n_degenerate=n_degenerate,
        replicates=replicates,
    )
