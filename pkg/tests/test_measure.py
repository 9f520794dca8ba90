import numpy as np
import pytest

from walkingcat.measure import (
    LMTIME,
    MeasureParams,
    edm_duration,
    edm_rounds,
    lm_time,
    lmtime_rows,
    p_ecm,
    p_edm,
    p_flip,
    viterbi_distribution,
    viterbi_duration,
    viterbi_margin,
    viterbi_monte_carlo,
)


class TestParams:
    def test_default_miss_rate(self) -> None:
        assert MeasureParams(w=10).miss == pytest.approx(5e-3)
        assert MeasureParams(w=10, p_miss=0.0).miss == 0.0

    def test_validation(self) -> None:
        with pytest.raises(ValueError, match="weight"):
            MeasureParams(w=-1)
        with pytest.raises(ValueError, match="target precision"):
            MeasureParams(w=10, eps=0.5)
        with pytest.raises(ValueError, match="p_miss"):
            MeasureParams(w=10, p_miss=1.0)
        with pytest.raises(ValueError, match="constants"):
            MeasureParams(w=10, c1=0.0)


class TestFlipHeuristics:
    def test_p_flip(self) -> None:
        assert p_flip(MeasureParams(w=0)) == 0.0
        assert p_flip(MeasureParams(w=16)) == pytest.approx(3.36e-3)
        assert p_flip(MeasureParams(w=18)) == pytest.approx(3.78e-3)

    def test_single_repetition(self) -> None:
        params = MeasureParams(w=16)
        assert p_edm(params, 1) == pytest.approx(p_flip(params))
        assert p_ecm(params, 1) == pytest.approx(p_flip(params))

    def test_injection_checks(self) -> None:
        assert p_edm(MeasureParams(w=16, p_log=3e-10), 3) == pytest.approx(3.90e-8, rel=1e-2)
        assert p_edm(MeasureParams(w=18, p_log=1e-10), 3) == pytest.approx(5.44e-8, rel=1e-2)

    def test_detection_beats_correction(self) -> None:
        params = MeasureParams(w=30, p_log=1e-9)
        for r in range(2, 8):
            assert p_edm(params, r) <= p_ecm(params, r)

    def test_repetitions_must_be_positive(self) -> None:
        with pytest.raises(ValueError):
            p_edm(MeasureParams(w=10), 0)
        with pytest.raises(ValueError):
            p_ecm(MeasureParams(w=10), 0)


class TestEdm:
    def test_table_rows(self) -> None:
        assert edm_duration(MeasureParams(w=10), 1e-5) == 3
        assert edm_duration(MeasureParams(w=10), 1e-10) == 5
        assert edm_duration(MeasureParams(w=20), 1e-10) == 6

    def test_table_within_one(self) -> None:
        for w, (edm5, edm10, _) in LMTIME.items():
            assert abs(edm_duration(MeasureParams(w=w), 1e-5) - edm5) <= 1
            assert abs(edm_duration(MeasureParams(w=w), 1e-10) - edm10) <= 1

    def test_minimal_rounds(self) -> None:
        params = MeasureParams(w=10)
        r = edm_rounds(params, 1e-10)
        assert p_flip(params) ** r <= 1e-10 < p_flip(params) ** (r - 1)

    def test_noiseless(self) -> None:
        assert edm_rounds(MeasureParams(w=0)) == 1

    def test_always_flipping(self) -> None:
        with pytest.raises(ValueError):
            edm_rounds(MeasureParams(w=10_000))


class TestViterbi:
    @pytest.mark.parametrize("w", sorted(LMTIME))
    def test_published_durations(self, w: int) -> None:
        assert viterbi_duration(MeasureParams(w=w)) == pytest.approx(LMTIME[w][2], abs=0.01)

    def test_margins(self) -> None:
        assert viterbi_margin(MeasureParams(w=10)) == 4
        assert viterbi_margin(MeasureParams(w=54)) == 6

    def test_closed_form(self) -> None:
        for w in LMTIME:
            params = MeasureParams(w=w)
            dist = viterbi_distribution(params)
            assert dist.expected == pytest.approx(dist.closed_form(params), rel=1e-6)

    def test_nearly_noiseless(self) -> None:
        params = MeasureParams(w=0.001, p_miss=0.0)
        k = viterbi_margin(params)
        assert viterbi_duration(params) == pytest.approx(k, rel=1e-5)

    def test_distribution(self) -> None:
        params = MeasureParams(w=30)
        dist = viterbi_distribution(params)
        assert dist.pmf.sum() == pytest.approx(1.0)
        mean = float(np.dot(np.arange(len(dist.pmf)), dist.pmf))
        assert mean == pytest.approx(dist.expected, rel=1e-9)
        assert dist.wrong < 1e-9
        quantiles = dist.quantiles()
        assert dist.margin <= quantiles["p50"] <= quantiles["p99"] <= quantiles["p999"]

    def test_monotone(self) -> None:
        durations = [viterbi_duration(MeasureParams(w=w)) for w in (5, 10, 20, 30, 54, 80)]
        assert durations == sorted(durations)
        by_eps = [viterbi_duration(MeasureParams(w=30, eps=e)) for e in (1e-3, 1e-6, 1e-10)]
        assert by_eps == sorted(by_eps)

    def test_monte_carlo(self) -> None:
        for w in LMTIME:
            params = MeasureParams(w=w)
            times = viterbi_monte_carlo(params, 100_000, seed=w)
            assert times.mean() == pytest.approx(viterbi_duration(params), rel=0.01)

    def test_no_information(self) -> None:
        with pytest.raises(ValueError, match="no information"):
            viterbi_margin(MeasureParams(w=3000))


def test_lm_time() -> None:
    assert lm_time(54, 2.0) == pytest.approx((viterbi_duration(MeasureParams(w=54)) + 1) * 2.0)


def test_lmtime_rows() -> None:
    rows = lmtime_rows()
    assert [row["w"] for row in rows] == [10, 20, 30, 54]
    for row in rows:
        assert row["viterbi"] == pytest.approx(row["published"][2], abs=0.01)
