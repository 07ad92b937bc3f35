"""Episode dating: crossing rules on statistic sequences, start-point
refinement, and regime-model fitting by least squares.

Two families of estimators live here.  Crossing-based stamping reads a
statistic sequence against a critical-value sequence: an episode starts
at the first window end whose statistic exceeds its critical value and
ends at the first later point (at least a minimum duration away) back
below it.  Model-based stamping fits piecewise autoregressions with
regime dummies and picks break dates by sum-of-squared-residual and
information-criterion comparison.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import recursive
from .exceptions import DegenerateFitError
from .recursive import StatSequence, _resolve_tau0
from .robust import sign_path
from .series import Series, as_values, frac_to_index

__all__ = [
    "CV_SOURCES",
    "BIC_PENALTY",
    "Episode",
    "CvSequence",
    "rule_critical_value",
    "default_min_duration",
    "pwy_stamp",
    "psy_stamp",
    "bic_init",
    "BubbleModelFit",
    "fit_bubble_model",
    "ModelSelection",
    "select_model_bic",
    "two_step_stamp",
    "sign_stamp",
    "training_max_monitor",
    "episodes_to_json",
    "episodes_to_csv",
]

CV_SOURCES = ("asymptotic-rule", "simulated", "bootstrap")

#: Information-criterion penalty per model: estimated coefficients plus
#: estimated break dates (2+1, 2+2, 4+2, 4+3).
BIC_PENALTY = {1: 3, 2: 4, 3: 6, 4: 7}

DEFAULT_MIN_SEGMENT = 3


def rule_critical_value(T: int) -> float:
    """Slowly diverging critical value (2/3)·log(log² T) for date stamping.

    Grows without bound so the false-detection probability vanishes
    asymptotically, yet slowly enough to keep power against explosive
    windows.
    """
    if T < 3:
        raise ValueError(f"rule critical value needs T >= 3, got {T}")
    return (2.0 / 3.0) * math.log(math.log(T) ** 2)


def default_min_duration(T: int, delta: float = 1.0) -> float:
    """Minimum episode length delta·log(T)/T as a fraction of the sample.

    Keeps stamped episodes economically significant: the implied duration
    in observations grows like log T.
    """
    if T < 2:
        raise ValueError(f"minimum duration rule needs T >= 2, got {T}")
    if delta <= 0:
        raise ValueError(f"duration multiplier must be positive, got {delta}")
    return delta * math.log(T) / T


@dataclass
class CvSequence:
    """Critical values aligned one-to-one with a statistic sequence."""

    values: np.ndarray
    source: str = "asymptotic-rule"

    def __post_init__(self) -> None:
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if self.source not in CV_SOURCES:
            raise ValueError(f"cv source must be one of {CV_SOURCES}, got {self.source!r}")

    @classmethod
    def constant(cls, value: float, n: int, source: str = "simulated") -> "CvSequence":
        return cls(values=np.full(n, float(value)), source=source)

    @classmethod
    def from_rule(cls, seq: StatSequence) -> "CvSequence":
        value = rule_critical_value(seq.nobs)
        return cls(values=np.full(seq.values.size, value), source="asymptotic-rule")


@dataclass
class Episode:
    """One explosive episode: origin, collapse, and optional recovery.

    Fractions are index/T; integer indices are the primary record (the
    floor-mapped counterparts of the fractions).  ``model`` is set when
    the dates come from a regime-model fit.
    """

    origin: float
    collapse: float
    origin_index: int
    collapse_index: int
    recovery: float | None = None
    recovery_index: int | None = None
    model: int | None = None

    def __post_init__(self) -> None:
        if not self.origin < self.collapse:
            raise ValueError(
                f"origin {self.origin} must precede collapse {self.collapse}"
            )
        if not self.origin_index < self.collapse_index:
            raise ValueError("origin index must precede collapse index")
        if (self.recovery is None) != (self.recovery_index is None):
            raise ValueError("recovery fraction and index must be set together")
        if self.recovery is not None and not self.collapse <= self.recovery:
            raise ValueError(
                f"collapse {self.collapse} must not exceed recovery {self.recovery}"
            )
        if self.model is not None and self.model not in BIC_PENALTY:
            raise ValueError(f"model must be one of {sorted(BIC_PENALTY)}, got {self.model}")

    def to_dict(self) -> dict:
        return {
            "origin": self.origin,
            "collapse": self.collapse,
            "recovery": self.recovery,
            "origin_index": self.origin_index,
            "collapse_index": self.collapse_index,
            "recovery_index": self.recovery_index,
            "model": self.model,
        }


def episodes_to_json(episodes) -> str:
    return json.dumps([ep.to_dict() for ep in episodes])


def episodes_to_csv(path, episodes, series: Series | None = None) -> None:
    """Write episodes as CSV; adds date labels when the series has them."""
    labels = series.labels if series is not None and series.labels is not None else None
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        head = [
            "origin",
            "collapse",
            "recovery",
            "model",
            "origin_index",
            "collapse_index",
            "recovery_index",
        ]
        if labels is not None:
            head += ["origin_label", "collapse_label", "recovery_label"]
        w.writerow(head)
        for ep in episodes:
            row = [
                format(ep.origin, ".17g"),
                format(ep.collapse, ".17g"),
                "" if ep.recovery is None else format(ep.recovery, ".17g"),
                "" if ep.model is None else ep.model,
                ep.origin_index,
                ep.collapse_index,
                "" if ep.recovery_index is None else ep.recovery_index,
            ]
            if labels is not None:
                row += [
                    labels[ep.origin_index - 1],
                    labels[ep.collapse_index - 1],
                    "" if ep.recovery_index is None else labels[ep.recovery_index - 1],
                ]
            w.writerow(row)


def _resolve_cv(seq: StatSequence, cv) -> CvSequence:
    if cv is None:
        return CvSequence.from_rule(seq)
    if isinstance(cv, CvSequence):
        if cv.values.size != seq.values.size:
            raise ValueError(
                f"critical-value sequence length {cv.values.size} does not match "
                f"statistic sequence length {seq.values.size}"
            )
        return cv
    return CvSequence.constant(float(cv), seq.values.size)


def _scan_crossings(seq: StatSequence, cv: CvSequence, min_duration: float):
    """Shared crossing scan: strict up-crossing opens an episode, first
    strict down-crossing at least min_duration later closes it; an
    episode still open at the sample end is closed there when its
    duration already clears the floor."""
    T = seq.nobs
    ends = np.rint(seq.tau2 * T).astype(np.int64)
    vals = seq.values
    cvs = cv.values
    if not 0.0 < min_duration < 1.0:
        raise ValueError(f"min_duration must lie in (0, 1), got {min_duration}")
    gap = min_duration * T
    episodes: list[tuple[int, int]] = []
    n = vals.size
    i = 0
    while i < n:
        while i < n and not vals[i] > cvs[i]:
            i += 1
        if i == n:
            break
        o = i
        j = o
        while j < n and ends[j] < ends[o] + gap - 1e-9:
            j += 1
        while j < n and not vals[j] < cvs[j]:
            j += 1
        if j == n:
            if ends[n - 1] >= ends[o] + gap - 1e-9:
                episodes.append((o, n - 1))
            break
        episodes.append((o, j))
        i = j
    return [
        Episode(
            origin=float(seq.tau2[o]),
            collapse=float(seq.tau2[c]),
            origin_index=int(ends[o]),
            collapse_index=int(ends[c]),
        )
        for o, c in episodes
    ]


def pwy_stamp(
    seq: StatSequence,
    cv=None,
    min_duration: float | None = None,
    delta: float = 1.0,
) -> list[Episode]:
    """Date episodes from a forward-recursive statistic sequence.

    The origin is the first window end whose statistic strictly exceeds
    its critical value; the collapse is the first subsequent end, at
    least ``min_duration`` later, strictly back below.  ``cv`` may be a
    CvSequence, a scalar, or None for the slowly diverging rule; ties at
    the critical value never trigger.
    """
    T = seq.nobs
    if min_duration is None:
        min_duration = default_min_duration(T, delta)
    return _scan_crossings(seq, _resolve_cv(seq, cv), min_duration)


def psy_stamp(
    bsadf: StatSequence,
    cv=None,
    min_duration: float | None = None,
    delta: float = 1.0,
) -> list[Episode]:
    """Date episodes from a backward-sup statistic sequence.

    Same crossing rules as :func:`pwy_stamp`, applied to the per-endpoint
    backward sup curve; after each collapse the scan restarts from that
    point, so several episodes are stamped in order.  Because every
    window end looks back over all admissible starts, later bubbles are
    found even when shorter than earlier ones.
    """
    T = bsadf.nobs
    if min_duration is None:
        min_duration = default_min_duration(T, delta)
    return _scan_crossings(bsadf, _resolve_cv(bsadf, cv), min_duration)


def bic_init(series, origin_index: int, n_min: int | None = None) -> int:
    """Refine the recursion start behind a stamped origin by model comparison.

    Starting from the ``n_min`` observations before the stamped origin,
    the window grows backward one observation at a time while the
    information criterion prefers the autoregression over the random
    walk with drift and the autoregressive root exceeds one; the walk
    stops as soon as the random-walk model wins, and the reached start
    (floor 1) is returned.  Reaching 1 recovers the full-sample
    recursion.
    """
    v = as_values(series)
    T = v.size
    if not 2 <= origin_index <= T:
        raise ValueError(f"origin index {origin_index} outside sample of length {T}")
    if n_min is None:
        n_min = max(3, (origin_index - 1) // 10)
    if n_min < 3:
        raise ValueError(f"n_min must be >= 3, got {n_min}")
    start = origin_index - n_min
    if start < 1:
        raise ValueError(
            f"origin index {origin_index} leaves no room for n_min={n_min} "
            "observations before it"
        )
    dy = np.diff(v)
    while True:
        # regression rows t = start+1 .. origin_index on the sample that
        # begins at the current initial condition
        d = dy[start - 1 : origin_index - 1]
        lag = v[start - 1 : origin_index - 1]
        n = d.size
        ur_resid = d - d.mean()
        ssr_ur = float(ur_resid @ ur_resid)
        X = np.column_stack([np.ones(n), lag])
        beta, _, rank, _ = np.linalg.lstsq(X, d + lag, rcond=None)
        if rank < 2:
            raise DegenerateFitError(
                f"autoregression is rank deficient on window starting at {start}"
            )
        ar_resid = (d + lag) - X @ beta
        ssr_ar = float(ar_resid @ ar_resid)
        if ssr_ur <= 0 or ssr_ar <= 0:
            raise DegenerateFitError(
                f"zero residual variance on window starting at {start}"
            )
        bic_ur = math.log(ssr_ur / n) + math.log(n) / n
        bic_ar = math.log(ssr_ar / n) + 2.0 * math.log(n) / n
        delta_hat = beta[1]
        if bic_ur > bic_ar and delta_hat > 1.0 and start > 1:
            start -= 1
            continue
        return start


@dataclass
class BubbleModelFit:
    """SSR and coefficients of one regime-dummy regression candidate.

    ``valid`` is False when the level-ordering constraints fail (the
    explosive regime must end above its start, and above the recovery
    point when a collapse regime is present); such candidates are
    excluded from date minimisation but their fit is still reported.
    """

    model: int
    ssr: float
    coeffs: np.ndarray
    valid: bool
    dates: tuple[int, ...]
    fractions: tuple[float, ...]


def _model_dates_to_indices(model: int, fractions, T: int) -> tuple[int, ...]:
    fr = tuple(float(f) for f in fractions)
    if len(fr) != 3:
        raise ValueError("candidate dates must be a (tau1, tau2, tau3) triple")
    t1, t2, t3 = fr
    if not 0 < t1 < 1:
        raise ValueError(f"tau1 must lie in (0, 1), got {t1}")
    if model == 1:
        if not (t2 == 1.0 and t3 == 1.0):
            raise ValueError("model 1 requires tau2 = tau3 = 1")
    elif model == 2:
        if not t2 == t3:
            raise ValueError("model 2 requires tau2 = tau3")
    elif model == 3:
        if not t3 == 1.0:
            raise ValueError("model 3 requires tau3 = 1")
    elif model != 4:
        raise ValueError(f"model must be one of {sorted(BIC_PENALTY)}, got {model}")
    if not t1 < t2 <= t3 <= 1.0:
        raise ValueError(f"dates must satisfy tau1 < tau2 <= tau3 <= 1, got {fr}")
    return frac_to_index(t1, T), frac_to_index(t2, T), frac_to_index(t3, T)


def _check_segments(model: int, a: int, b: int, c: int, T: int, min_seg: int) -> None:
    spans = [("pre-break regime", a), ("explosive regime", b - a)]
    if model in (3, 4):
        spans.append(("collapse regime", c - b))
    if model == 2:
        spans.append(("post-break regime", T - b))
    if model == 4:
        spans.append(("post-break regime", T - c))
    for name, length in spans:
        if length < min_seg:
            raise ValueError(
                f"{name} has {length} observations; need at least {min_seg}"
            )


def fit_bubble_model(
    series,
    model: int,
    dates,
    min_seg: int = DEFAULT_MIN_SEGMENT,
) -> BubbleModelFit:
    """Fit one piecewise-regime candidate by dummy regression in differences.

    The first differences are regressed on regime indicators and
    indicator-times-lagged-level terms; observations outside the explosive
    and collapse regimes enter the SSR as raw differences, encoding a
    unit root there.  Adding a constant to the series leaves the SSR
    unchanged because the regime intercepts absorb the shift.
    """
    v = as_values(series)
    T = v.size
    a, b, c = _model_dates_to_indices(model, dates, T)
    if model == 1:
        b = c = T
    elif model == 2:
        c = b
    elif model == 3:
        c = T
    _check_segments(model, a, b, c, T, min_seg)

    t = np.arange(2, T + 1)
    dep = v[t - 1] - v[t - 2]
    lag = v[t - 2]
    reg1 = (t > a) & (t <= b)
    cols = [reg1.astype(float), reg1 * lag]
    if model in (3, 4):
        reg2 = (t > b) & (t <= c)
        cols += [reg2.astype(float), reg2 * lag]
    X = np.column_stack(cols)
    beta, _, rank, _ = np.linalg.lstsq(X, dep, rcond=None)
    if rank < X.shape[1]:
        raise DegenerateFitError(
            f"model {model} regression singular at dates {(a, b, c)}"
        )
    resid = dep - X @ beta
    valid = v[b - 1] > v[a - 1]
    if model in (3, 4):
        valid = valid and v[b - 1] > v[c - 1]
    fr = (a / T, b / T, c / T)
    return BubbleModelFit(
        model=model,
        ssr=float(resid @ resid),
        coeffs=beta,
        valid=bool(valid),
        dates=(a, b, c),
        fractions=fr,
    )


def _segment_ssr_engine(v: np.ndarray):
    """Closed-form per-segment regression SSRs from prefix cross-moments.

    The regime-dummy regression decouples across disjoint regimes, so the
    full-candidate SSR is a sum of per-segment two-parameter regression
    SSRs plus raw squared differences outside the regimes.  Returns
    (seg_ssr(s, e) vectorized over e, prefix of squared differences).
    """
    w = v - v.mean()
    dy = np.diff(w)
    lag = w[:-1]
    z = np.zeros(1)
    P1 = np.concatenate([z, np.cumsum(np.ones_like(dy))])
    Py = np.concatenate([z, np.cumsum(lag)])
    Pyy = np.concatenate([z, np.cumsum(lag * lag)])
    Pd = np.concatenate([z, np.cumsum(dy)])
    Pdd = np.concatenate([z, np.cumsum(dy * dy)])
    Pyd = np.concatenate([z, np.cumsum(lag * dy)])

    def seg(s, e):
        # SSR of dy on [1, lagged level] over rows t = s+1..e (1-based);
        # +inf where the segment is too short or collinear
        lo = np.asarray(s, dtype=np.int64) - 1
        hi = np.asarray(e, dtype=np.int64) - 1
        n = P1[hi] - P1[lo]
        sy = Py[hi] - Py[lo]
        syy = Pyy[hi] - Pyy[lo]
        sd = Pd[hi] - Pd[lo]
        sdd = Pdd[hi] - Pdd[lo]
        syd = Pyd[hi] - Pyd[lo]
        with np.errstate(invalid="ignore", divide="ignore"):
            cyy = syy - sy * sy / n
            cyd = syd - sy * sd / n
            cdd = sdd - sd * sd / n
            out = cdd - cyd * cyd / cyy
        scale = np.maximum(np.abs(sdd), 1.0)
        bad = (n < 2) | ~(cyy > 1e-12 * np.maximum(np.abs(syy), 1.0))
        out = np.where(bad, np.inf, np.maximum(out, 0.0))
        # guard catastrophic cancellation: a tiny negative is a zero fit
        return np.where(out < -1e-8 * scale, np.inf, out)

    return seg, Pdd


@dataclass
class ModelSelection:
    """Winning regime model with its dates and the per-model comparison."""

    model: int
    episode: Episode
    bic: dict
    ssr: dict
    dates: dict
    fit: BubbleModelFit


def _search_model(v, model, min_seg, seg, Pdd, stride):
    """Minimum-SSR admissible dates for one model; (ssr, dates) or None."""
    T = v.size
    total = Pdd[T - 1]
    ms = min_seg
    best_ssr = np.inf
    best = None

    def better(ssr, dates):
        nonlocal best_ssr, best
        if ssr < best_ssr or (ssr == best_ssr and best is not None and dates < best):
            best_ssr = ssr
            best = dates

    a_grid = np.arange(ms, T + 1, stride, dtype=np.int64)
    if model == 1:
        a = a_grid[a_grid <= T - ms]
        if a.size:
            ssr = Pdd[a - 1] + seg(a, np.full(a.size, T))
            ok = v[T - 1] > v[a - 1]
            ssr = np.where(ok, ssr, np.inf)
            i = int(np.argmin(ssr))
            if np.isfinite(ssr[i]):
                better(float(ssr[i]), (int(a[i]),))
    elif model in (2, 3):
        for a in a_grid:
            b = np.arange(a + ms, T - ms + 1, stride, dtype=np.int64)
            if not b.size:
                continue
            if model == 2:
                ssr = Pdd[a - 1] + seg(np.full(b.size, a), b) + (total - Pdd[b - 1])
                ok = v[b - 1] > v[a - 1]
            else:
                ssr = (
                    Pdd[a - 1]
                    + seg(np.full(b.size, a), b)
                    + seg(b, np.full(b.size, T))
                )
                ok = (v[b - 1] > v[a - 1]) & (v[b - 1] > v[T - 1])
            ssr = np.where(ok, ssr, np.inf)
            i = int(np.argmin(ssr))
            if np.isfinite(ssr[i]):
                better(float(ssr[i]), (int(a), int(b[i])))
    else:
        for a in a_grid:
            for b in np.arange(a + ms, T + 1, stride, dtype=np.int64):
                if not v[b - 1] > v[a - 1]:
                    continue
                c = np.arange(b + ms, T - ms + 1, stride, dtype=np.int64)
                if not c.size:
                    continue
                ssr = (
                    Pdd[a - 1]
                    + seg(np.full(c.size, a), np.full(c.size, b))
                    + seg(np.full(c.size, b), c)
                    + (total - Pdd[c - 1])
                )
                ok = v[b - 1] > v[c - 1]
                ssr = np.where(ok, ssr, np.inf)
                i = int(np.argmin(ssr))
                if np.isfinite(ssr[i]):
                    better(float(ssr[i]), (int(a), int(b), int(c[i])))
    if best is None:
        return None
    return best_ssr, best


def _dates_to_fractions(model: int, dates: tuple[int, ...], T: int):
    if model == 1:
        (a,) = dates
        return (a / T, 1.0, 1.0)
    if model == 2:
        a, b = dates
        return (a / T, b / T, b / T)
    if model == 3:
        a, b = dates
        return (a / T, b / T, 1.0)
    a, b, c = dates
    return (a / T, b / T, c / T)


def _selection_episode(model: int, dates: tuple[int, ...], T: int) -> Episode:
    if model == 1:
        (a,) = dates
        return Episode(a / T, 1.0, a, T, model=model)
    if model == 2:
        a, b = dates
        return Episode(a / T, b / T, a, b, model=model)
    if model == 3:
        a, b = dates
        return Episode(a / T, b / T, a, b, recovery=1.0, recovery_index=T, model=model)
    a, b, c = dates
    return Episode(a / T, b / T, a, b, recovery=c / T, recovery_index=c, model=model)


def select_model_bic(
    series,
    min_seg: int = DEFAULT_MIN_SEGMENT,
    stride: int = 1,
    models=(1, 2, 3, 4),
) -> ModelSelection:
    """Choose the regime model and dates by penalized SSR comparison.

    Every model's SSR is minimized over its admissible date grid (every
    integer combination when ``stride`` is 1), then models are compared
    by T·log(SSR/T) plus a penalty of 3, 4, 6, or 7 times log T counting
    coefficients and estimated dates.  Ties prefer the smaller model.
    Intended to run after a detection pass has already flagged an
    episode.
    """
    v = as_values(series)
    T = v.size
    if min_seg < 2:
        raise ValueError(f"min_seg must be >= 2, got {min_seg}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    seg, Pdd = _segment_ssr_engine(v)
    bics: dict[int, float] = {}
    ssrs: dict[int, float] = {}
    dates: dict[int, tuple[int, ...]] = {}
    for m in models:
        if m not in BIC_PENALTY:
            raise ValueError(f"unknown model {m}")
        found = _search_model(v, m, min_seg, seg, Pdd, stride)
        if found is None:
            continue
        ssr, ds = found
        if stride > 1:
            ssr, ds = _refine_local(v, m, ds, min_seg, seg, Pdd, stride)
        if not ssr > 0:
            # an exact fit: the penalty comparison degenerates, keep it as
            # a perfect candidate with formally infinite preference
            bics[m] = -np.inf
        else:
            bics[m] = T * math.log(ssr / T) + BIC_PENALTY[m] * math.log(T)
        ssrs[m] = ssr
        dates[m] = ds
    if not bics:
        raise DegenerateFitError(
            "no admissible regime candidate in any model; the sample is too "
            "short or too degenerate for date fitting"
        )
    winner = min(bics, key=lambda m: (bics[m], m))
    fit = fit_bubble_model(v, winner, _dates_to_fractions(winner, dates[winner], T), min_seg)
    return ModelSelection(
        model=winner,
        episode=_selection_episode(winner, dates[winner], T),
        bic=bics,
        ssr=ssrs,
        dates=dates,
        fit=fit,
    )


def _refine_local(v, model, coarse, min_seg, seg, Pdd, stride):
    """Exact search in the stride-neighbourhood of a coarse optimum."""
    T = v.size
    total = Pdd[T - 1]
    ms = min_seg
    rngs = [
        np.arange(max(ms, d - stride), min(T, d + stride) + 1, dtype=np.int64)
        for d in coarse
    ]
    best = (np.inf, coarse)
    if model == 1:
        for a in rngs[0]:
            if a > T - ms or not v[T - 1] > v[a - 1]:
                continue
            ssr = float(Pdd[a - 1] + seg(np.int64(a), np.int64(T)))
            if (ssr, (int(a),)) < best:
                best = (ssr, (int(a),))
    elif model in (2, 3):
        for a in rngs[0]:
            for b in rngs[1]:
                if b < a + ms or b > T - ms:
                    continue
                if model == 2:
                    if not v[b - 1] > v[a - 1]:
                        continue
                    ssr = float(Pdd[a - 1] + seg(np.int64(a), np.int64(b)) + total - Pdd[b - 1])
                else:
                    if not (v[b - 1] > v[a - 1] and v[b - 1] > v[T - 1]):
                        continue
                    ssr = float(
                        Pdd[a - 1] + seg(np.int64(a), np.int64(b)) + seg(np.int64(b), np.int64(T))
                    )
                if (ssr, (int(a), int(b))) < best:
                    best = (ssr, (int(a), int(b)))
    else:
        for a in rngs[0]:
            for b in rngs[1]:
                if b < a + ms or not v[b - 1] > v[a - 1]:
                    continue
                for c in rngs[2]:
                    if c < b + ms or c > T - ms or not v[b - 1] > v[c - 1]:
                        continue
                    ssr = float(
                        Pdd[a - 1]
                        + seg(np.int64(a), np.int64(b))
                        + seg(np.int64(b), np.int64(c))
                        + total
                        - Pdd[c - 1]
                    )
                    if (ssr, (int(a), int(b), int(c))) < best:
                        best = (ssr, (int(a), int(b), int(c)))
    return best


def two_step_stamp(
    series,
    tau0: float | None = None,
    det: str = "const",
    k: int = 0,
    cv=None,
    min_duration: float | None = None,
    delta: float = 1.0,
    min_seg: int = DEFAULT_MIN_SEGMENT,
    stride: int = 1,
) -> list[Episode]:
    """Crossing-based stamping refined by per-episode regime-model fits.

    Step one stamps episodes from the backward sup curve.  Step two
    splits the sample at midpoints between consecutive episodes and
    reruns the penalized model search on each piece, replacing the
    stamped dates with the fitted ones (mapped back to full-sample
    indices).  Episodes whose piece admits no regime candidate keep
    their stamped dates.
    """
    v = as_values(series)
    T = v.size
    sup = recursive.gsadf(v, tau0=tau0, det=det, k=k)
    rough = psy_stamp(sup.sequence, cv=cv, min_duration=min_duration, delta=delta)
    if not rough:
        return []
    refined: list[Episode] = []
    for i, ep in enumerate(rough):
        lo = 1 if i == 0 else (rough[i - 1].collapse_index + ep.origin_index) // 2
        hi = T if i == len(rough) - 1 else (ep.collapse_index + rough[i + 1].origin_index) // 2
        lo = max(lo, 1)
        piece = v[lo - 1 : hi]
        try:
            sel = select_model_bic(piece, min_seg=min_seg, stride=stride)
        except DegenerateFitError:
            refined.append(ep)
            continue
        sub = sel.episode
        origin_index = lo - 1 + sub.origin_index
        collapse_index = lo - 1 + sub.collapse_index
        recovery_index = (
            None if sub.recovery_index is None else lo - 1 + sub.recovery_index
        )
        refined.append(
            Episode(
                origin=origin_index / T,
                collapse=collapse_index / T,
                origin_index=origin_index,
                collapse_index=collapse_index,
                recovery=None if recovery_index is None else recovery_index / T,
                recovery_index=recovery_index,
                model=sel.model,
            )
        )
    return refined


def sign_stamp(
    series,
    tau0: float | None = None,
    epsilon: float = 0.01,
    mode: str = "raw",
    filter_lags: int = 0,
) -> Episode:
    """Date one episode by maximizing the corrected sign statistic.

    The window statistic on the cumulated increment signs is rescaled by
    a between-window variance built from prefix variances, raised to a
    small exponent (default 0.01); jointly maximizing over both window
    ends makes origin and collapse estimates consistent.  The maximizing
    window must span at least the minimum window fraction.
    """
    v = as_values(series)
    T = v.size
    tau0, m0 = _resolve_tau0(T, tau0)
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    C = sign_path(v, mode=mode, filter_lags=filter_lags)
    if not np.any(C != 0):
        raise DegenerateFitError("all increment signs are zero (flat series)")
    x = C[:-1].astype(float)
    d = np.diff(C).astype(float)
    z = np.zeros(1)
    PA = np.concatenate([z, np.cumsum(x * x)])
    PB = np.concatenate([z, np.cumsum(x * d)])
    PC = np.concatenate([z, np.cumsum(d * d)])

    # prefix variances of the sign regression, defined from window (0, e]
    e_all = np.arange(T + 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        s2_prefix = (PC - PB * PB / PA) / (e_all - 1)
    s2_prefix[PA <= 0] = np.nan
    s2_prefix[e_all < 2] = np.nan

    best = -np.inf
    best_dates = None
    for e in range(m0, T + 1):
        if np.isnan(s2_prefix[e]):
            continue
        s = np.arange(0, e - m0 + 1)
        sxx = PA[e] - PA[s]
        sxy = PB[e] - PB[s]
        num = e * s2_prefix[e] - np.where(s > 0, s * s2_prefix[s], 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            s2c = num / (e - s - 1)
            stat = (sxy / sxx) / np.sqrt(s2c**epsilon / sxx)
        ok = (sxx > 0) & (s2c > 0)
        ok &= ~((s > 0) & np.isnan(s2_prefix[s]))
        stat = np.where(ok, stat, -np.inf)
        i = int(np.argmax(stat))
        if stat[i] > best:
            best = float(stat[i])
            best_dates = (int(s[i]), e)
    if best_dates is None:
        raise DegenerateFitError("no admissible window for sign-based dating")
    s_star, e_star = best_dates
    return Episode(
        origin=s_star / T,
        collapse=e_star / T,
        origin_index=s_star,
        collapse_index=e_star,
    )


def training_max_monitor(training: StatSequence, monitor: StatSequence):
    """First monitoring position whose statistic strictly exceeds the
    training maximum, or None.

    A tie with the training maximum is not a detection.
    """
    if training.values.size == 0 or np.all(np.isnan(training.values)):
        raise ValueError("training sequence must contain at least one statistic")
    threshold = float(np.nanmax(training.values))
    above = np.flatnonzero(monitor.values > threshold)
    return int(above[0]) if above.size else None
