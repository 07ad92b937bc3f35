"""Windowed ADF engine: dense reference, vectorized scans, GLS helpers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from exuberance import DegenerateFitError, adf_stat, adf_tstat_pairs, fit_adf_window
from exuberance.ols import (
    bsadf_backward,
    gls_adjust,
    sadf_prefix_stats,
    tstat_ar_noconst,
    _rowwise_max,
)

DETS = ("none", "const", "trend")


def _grid(T, m0):
    starts, ends = [], []
    for e in range(m0, T + 1):
        for s in range(0, e - m0 + 1):
            starts.append(s)
            ends.append(e)
    return np.array(starts), np.array(ends)


class TestDenseFit:
    def test_worked_example(self):
        # y = (0, 1, 0, 2, 1), intercept, no lags: delta = -15/11 and the
        # t-ratio is exactly -2.5 on 4 regression rows.
        y = np.array([0.0, 1.0, 0.0, 2.0, 1.0])
        fit = fit_adf_window(y, 0, 5, det="const", k=0)
        assert fit.nobs == 4
        assert fit.delta == pytest.approx(-15 / 11, abs=1e-12)
        assert fit.tstat == pytest.approx(-2.5, abs=1e-12)
        assert fit.columns == ("const", "level")

    def test_row_count(self):
        rng = np.random.default_rng(5)
        v = np.cumsum(rng.standard_normal(30))
        for k in (0, 1, 3):
            fit = fit_adf_window(v, 4, 26, det="const", k=k)
            assert fit.nobs == 26 - 4 - k - 1

    def test_window_slices_half_open(self):
        rng = np.random.default_rng(11)
        v = np.cumsum(rng.standard_normal(40))
        full = fit_adf_window(v, 7, 29, det="const", k=1)
        sliced = fit_adf_window(v[7:29], 0, 22, det="const", k=1)
        assert full.tstat == sliced.tstat
        assert full.delta == sliced.delta

    @pytest.mark.parametrize("det", DETS)
    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_matches_oracle(self, det, k):
        rng = np.random.default_rng(17)
        v = np.cumsum(rng.standard_normal(35))
        for s, e in [(0, 35), (3, 20), (10, 35), (0, 12)]:
            got = fit_adf_window(v, s, e, det=det, k=k)
            want = oracles.adf_fit(v, s, e, det, k)
            assert got.tstat == pytest.approx(want.tstat, abs=1e-9)
            assert got.delta == pytest.approx(want.delta, abs=1e-9)
            assert got.sigma2 == pytest.approx(want.sigma2, rel=1e-9)
            assert got.nobs == want.nobs

    def test_matches_statsmodels(self):
        sm = pytest.importorskip("statsmodels.tsa.stattools")
        rng = np.random.default_rng(23)
        for trial in range(5):
            v = np.cumsum(rng.standard_normal(80)) + 10.0
            for det, reg in (("const", "c"), ("trend", "ct"), ("none", "n")):
                for k in (0, 2):
                    ref = sm.adfuller(v, maxlag=k, regression=reg, autolag=None)[0]
                    assert adf_stat(v, det=det, k=k) == pytest.approx(ref, abs=1e-8)

    def test_intercept_mapped_back_to_raw_scale(self):
        rng = np.random.default_rng(29)
        v = np.cumsum(rng.standard_normal(25)) + 100.0
        fit = fit_adf_window(v, 0, 25, det="const", k=0)
        want = oracles.adf_fit(v, 0, 25, "const", 0)
        np.testing.assert_allclose(fit.coeffs, want.beta, atol=1e-8)

    def test_too_short_raises(self):
        v = np.arange(10.0)
        with pytest.raises(DegenerateFitError):
            fit_adf_window(v, 0, 3, det="const", k=0)
        with pytest.raises(DegenerateFitError):
            fit_adf_window(v, 0, 5, det="trend", k=1)

    def test_constant_window_raises(self):
        v = np.full(12, 3.0)
        with pytest.raises(DegenerateFitError):
            fit_adf_window(v, 0, 12, det="const", k=0)

    def test_exact_explosive_fit_diverges(self):
        # doubling sequence: delta = 1 with a residual at rounding level,
        # so the t-ratio is +inf or astronomically large
        v = 2.0 ** np.arange(8)
        t = fit_adf_window(v, 0, 8, det="none", k=0).tstat
        assert t == np.inf or t > 1e6

    def test_bad_bounds(self):
        v = np.arange(10.0)
        with pytest.raises(ValueError):
            fit_adf_window(v, -1, 5)
        with pytest.raises(ValueError):
            fit_adf_window(v, 5, 5)
        with pytest.raises(ValueError):
            fit_adf_window(v, 0, 11)


class TestVectorizedPairs:
    @pytest.mark.parametrize("det", DETS)
    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_agrees_with_dense(self, det, k):
        rng = np.random.default_rng(101)
        v = np.cumsum(rng.standard_normal(50)) + 50.0
        starts, ends = _grid(50, 12)
        fast = adf_tstat_pairs(v, starts, ends, det=det, k=k)
        dense = np.array(
            [fit_adf_window(v, s, e, det=det, k=k).tstat for s, e in zip(starts, ends)]
        )
        np.testing.assert_allclose(fast, dense, atol=1e-8)

    def test_short_windows_yield_nan(self):
        v = np.cumsum(np.random.default_rng(3).standard_normal(20))
        out = adf_tstat_pairs(v, [0, 0], [3, 20], det="const", k=0)
        assert np.isnan(out[0]) and np.isfinite(out[1])

    def test_collinear_window_yields_nan(self):
        # alternating series makes the lagged difference an exact linear
        # combination of intercept and level, for every window
        v = np.array([1.0, -1.0] * 10)
        out = adf_tstat_pairs(v, [0], [20], det="const", k=1)
        assert np.isnan(out[0])
        with pytest.raises(DegenerateFitError):
            fit_adf_window(v, 0, 20, det="const", k=1)

    def test_bounds_validation(self):
        v = np.arange(10.0)
        with pytest.raises(ValueError):
            adf_tstat_pairs(v, [0], [11])
        with pytest.raises(ValueError):
            adf_tstat_pairs(v, [5], [5])

    def test_integer_shift_is_bit_exact(self):
        # anchored accumulation: adding an integer constant to integer data
        # changes nothing at all in the intercept models
        rng = np.random.default_rng(7)
        v = np.round(np.cumsum(rng.integers(-3, 4, size=40))).astype(float)
        starts, ends = _grid(40, 10)
        for det in ("const", "trend"):
            base = adf_tstat_pairs(v, starts, ends, det=det, k=1)
            shifted = adf_tstat_pairs(v + 1000.0, starts, ends, det=det, k=1)
            np.testing.assert_array_equal(base, shifted)

    def test_power_of_two_scale_is_bit_exact(self):
        rng = np.random.default_rng(13)
        v = np.cumsum(rng.standard_normal(40))
        starts, ends = _grid(40, 10)
        for det in DETS:
            base = adf_tstat_pairs(v, starts, ends, det=det, k=0)
            scaled = adf_tstat_pairs(v * 64.0, starts, ends, det=det, k=0)
            np.testing.assert_array_equal(base, scaled)


class TestScans:
    def test_prefix_stats_match_oracle(self):
        rng = np.random.default_rng(41)
        v = np.cumsum(rng.standard_normal(45))
        for det, k in (("const", 0), ("trend", 1), ("none", 0)):
            got = sadf_prefix_stats(v, 9, det=det, k=k)
            for e in range(9, 46):
                want = oracles.adf_fit(v, 0, e, det, k).tstat
                assert got[e] == pytest.approx(want, abs=1e-8)
            assert np.isnan(got[:9]).all()

    def test_backward_scan_matches_oracle(self):
        rng = np.random.default_rng(43)
        v = np.cumsum(rng.standard_normal(40))
        for det, k in (("const", 0), ("trend", 0), ("const", 1)):
            maxvals, argmax_s, _ = bsadf_backward(v, 8, det=det, k=k)
            stats, starts = oracles.bsadf_curve(v, 8, det, k)
            for e in range(8, 41):
                assert maxvals[e] == pytest.approx(stats[e], abs=1e-8)
                assert argmax_s[e] == starts[e]

    def test_backward_scan_matrix(self):
        rng = np.random.default_rng(47)
        v = np.cumsum(rng.standard_normal(25))
        maxvals, argmax_s, tmat = bsadf_backward(v, 6, want_matrix=True)
        assert tmat.shape == (26, 26)
        for e in range(6, 26):
            for s in range(0, e - 6 + 1):
                want = oracles.adf_fit(v, s, e, "const", 0).tstat
                assert tmat[e, s] == pytest.approx(want, abs=1e-8)
            row = tmat[e, : e - 6 + 1]
            assert maxvals[e] == pytest.approx(np.nanmax(row), abs=0)

    def test_kernel_and_generic_routes_agree(self):
        rng = np.random.default_rng(53)
        v = np.cumsum(rng.standard_normal(60))
        fast, fast_arg, _ = bsadf_backward(v, 12, det="const", k=0)
        starts, ends = _grid(60, 12)
        vals = adf_tstat_pairs(v, starts, ends, det="const", k=0)
        i = 0
        for e in range(12, 61):
            n = e - 12 + 1
            row = vals[i : i + n]
            i += n
            assert fast[e] == pytest.approx(np.nanmax(row), abs=1e-8)
            assert fast_arg[e] == int(np.nanargmax(np.where(np.isnan(row), -np.inf, row)))

    def test_exact_tie_takes_smallest_start(self):
        tmat = np.full((8, 8), np.nan)
        tmat[6, 0] = 1.0
        tmat[6, 1] = 2.0
        tmat[6, 2] = 2.0
        tmat[7, 0] = -1.0
        maxvals, argmax_s = _rowwise_max(tmat, 4, 7)
        assert np.isnan(maxvals[4]) and argmax_s[4] == -1
        assert maxvals[6] == 2.0 and argmax_s[6] == 1
        assert maxvals[7] == -1.0 and argmax_s[7] == 0

    def test_integer_data_argmax_attains_oracle_sup(self):
        # on integer-valued data exact ties can occur; the reported start
        # must attain the oracle's sup (to tolerance) for every endpoint
        rng = np.random.default_rng(59)
        for _ in range(5):
            v = np.cumsum(rng.integers(-2, 3, size=24)).astype(float)
            if np.ptp(v) == 0:
                continue
            maxvals, argmax_s, _ = bsadf_backward(v, 5)
            stats, _starts = oracles.bsadf_curve(v, 5, "const", 0)
            for e in range(5, 25):
                if np.isnan(stats[e]):
                    assert np.isnan(maxvals[e])
                    continue
                assert maxvals[e] == pytest.approx(stats[e], abs=1e-9)
                attained = oracles.adf_fit(v, int(argmax_s[e]), e, "const", 0).tstat
                assert attained == pytest.approx(stats[e], abs=1e-9)


class TestGls:
    def test_hand_computed_constant_case(self):
        # n = 3, y = (1, 2, 4), intercept only: rho = 1 + 1.6/3,
        # theta = sum(za*ya)/sum(za^2) with ya = (1, 2-rho, 4-2rho),
        # za = (1, 1-rho, 1-rho)
        y = np.array([1.0, 2.0, 4.0])
        rho = 1.0 + 1.6 / 3.0
        ya = np.array([1.0, 2.0 - rho, 4.0 - 2.0 * rho])
        za = np.array([1.0, 1.0 - rho, 1.0 - rho])
        theta = (za @ ya) / (za @ za)
        np.testing.assert_allclose(gls_adjust(y, det="const"), y - theta, atol=1e-12)

    @pytest.mark.parametrize("det", ["const", "trend"])
    def test_matches_oracle(self, det):
        rng = np.random.default_rng(61)
        v = np.cumsum(rng.standard_normal(30)) + 5.0
        np.testing.assert_allclose(
            gls_adjust(v, det=det), oracles.gls_residuals(v, det), atol=1e-9
        )

    def test_custom_cbar(self):
        v = np.cumsum(np.random.default_rng(67).standard_normal(20))
        np.testing.assert_allclose(
            gls_adjust(v, det="const", c_bar=-7.0),
            oracles.gls_residuals(v, "const", c_bar=-7.0),
            atol=1e-9,
        )

    def test_needs_deterministics(self):
        with pytest.raises(ValueError):
            gls_adjust(np.arange(5.0), det="none")

    def test_constant_series_residuals_vanish(self):
        u = gls_adjust(np.full(15, 2.5), det="const")
        np.testing.assert_allclose(u, 0.0, atol=1e-12)


class TestNoConstTstat:
    def test_hand_computed(self):
        # u = (1, 2, 3): delta = 3/5, ssr = 1/5, sigma2 = 1/5, t = 3
        assert tstat_ar_noconst(np.array([1.0, 2.0, 3.0])) == pytest.approx(3.0, abs=1e-12)

    def test_exact_fit_is_inf(self):
        assert tstat_ar_noconst(np.array([1.0, 2.0, 4.0])) == np.inf

    def test_degenerate(self):
        with pytest.raises(DegenerateFitError):
            tstat_ar_noconst(np.zeros(10))
        with pytest.raises(DegenerateFitError):
            tstat_ar_noconst(np.array([1.0, 2.0]))


@settings(max_examples=25, deadline=None)
@given(
    data=st.lists(st.integers(min_value=-5, max_value=5), min_size=14, max_size=28),
    shift=st.integers(min_value=-1000, max_value=1000),
)
def test_property_integer_shift_invariance(data, shift):
    v = np.cumsum(np.asarray(data, dtype=float))
    if np.ptp(v) == 0:
        return
    try:
        base = fit_adf_window(v, 0, v.size, det="const", k=0).tstat
    except DegenerateFitError:
        return
    moved = fit_adf_window(v + float(shift), 0, v.size, det="const", k=0).tstat
    assert base == moved


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=16, max_size=40))
def test_property_vectorized_matches_dense(data):
    v = np.cumsum(np.asarray(data))
    starts = np.array([0, 2, 5])
    ends = np.array([v.size, v.size, v.size - 1])
    fast = adf_tstat_pairs(v, starts, ends, det="const", k=0)
    for i, (s, e) in enumerate(zip(starts, ends)):
        try:
            dense = fit_adf_window(v, s, e, det="const", k=0).tstat
        except DegenerateFitError:
            assert np.isnan(fast[i])
            continue
        if np.isfinite(dense) and np.isfinite(fast[i]):
            assert fast[i] == pytest.approx(dense, abs=1e-7)
