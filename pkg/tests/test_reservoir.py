import numpy as np
import pytest

from walkingcat import WalkingCatError
from walkingcat.reservoir import (
    PUBLISHED_OPERATING_POINTS,
    ComponentCounts,
    CurvePoint,
    ReservoirChain,
    aggregate_losses,
    convolve,
    default_components,
    failure_probability,
    min_reservoir,
    operating_point,
    power,
    size_reservoir,
    steady_state,
)
from walkingcat.simkit import LossDistribution

LOSSLESS = LossDistribution(np.ones(1))
COIN = LossDistribution(np.array([0.9, 0.1]))


@pytest.fixture(scope="module")
def small_losses() -> LossDistribution:
    return aggregate_losses(default_components(ComponentCounts(5, 5, 10, 2)))


class TestAggregation:
    def test_lossless_component(self) -> None:
        total = aggregate_losses({"M": (3, LOSSLESS)})
        assert total.pmf.tolist() == [1.0]

    def test_two_components(self) -> None:
        total = aggregate_losses([(1, COIN), (1, COIN)])
        assert total.pmf == pytest.approx([0.81, 0.18, 0.01])

    def test_power(self) -> None:
        assert power(COIN, 0).pmf.tolist() == [1.0]
        thrice = convolve(convolve(COIN, COIN), COIN)
        assert power(COIN, 3).pmf == pytest.approx(thrice.pmf)
        with pytest.raises(ValueError):
            power(COIN, -1)

    def test_limit_moves_mass_to_tail(self) -> None:
        lumped = power(COIN, 4, limit=2)
        assert len(lumped.pmf) == 3
        assert lumped.tail == pytest.approx(4 * 0.9 * 0.1**3 + 0.1**4)

    def test_mean_is_additive(self) -> None:
        components = default_components(ComponentCounts(20, 20, 40, 5))
        total = aggregate_losses(components)
        expected = sum(count * dist.mean for count, dist in components.values())
        assert total.mean == pytest.approx(expected, rel=1e-9)


class TestChain:
    def test_rows_are_stochastic(self, small_losses: LossDistribution) -> None:
        matrix = ReservoirChain(60, 15, small_losses).transition_matrix()
        assert matrix.sum(axis=1) == pytest.approx(np.ones(61), abs=1e-12)
        assert (matrix >= 0).all()

    def test_too_many_loading_zones(self) -> None:
        with pytest.raises(ValueError, match="loading zones"):
            ReservoirChain(10, 200, COIN)
        with pytest.raises(ValueError, match="capacity"):
            ReservoirChain(0, 1, COIN)

    def test_lossless_chain_stays_full(self) -> None:
        pi = ReservoirChain(20, 5, LOSSLESS).steady_state()
        assert pi[-1] == pytest.approx(1.0)
        assert pi[0] == 0.0

    @pytest.mark.parametrize("method", ["balance", "power", "eigen"])
    def test_two_state_chain(self, method: str) -> None:
        lam, a = 0.2, 0.3
        chain = ReservoirChain(1, 1, LossDistribution(np.array([1 - lam, lam])), sec_time=a)
        expected = lam * (1 - a) / (lam * (1 - a) + a * (1 - lam))
        assert steady_state(chain, method)[0] == pytest.approx(expected, abs=1e-12)

    def test_unknown_method(self) -> None:
        with pytest.raises(ValueError, match="steady state method"):
            ReservoirChain(5, 1, COIN).steady_state("magic")

    def test_fixed_point(self, small_losses: LossDistribution) -> None:
        chain = ReservoirChain(150, 15, small_losses)
        pi = chain.steady_state()
        assert np.abs(pi @ chain.transition_matrix() - pi).sum() < 1e-12

    def test_balance_agrees_with_eigen(self, small_losses: LossDistribution) -> None:
        chain = ReservoirChain(40, 12, small_losses)
        assert chain.steady_state() == pytest.approx(chain.steady_state("eigen"), abs=1e-10)

    def test_failure_decreases_with_capacity(self, small_losses: LossDistribution) -> None:
        failures = [failure_probability(15, r, small_losses) for r in range(10, 200, 10)]
        assert all(b < a for a, b in zip(failures, failures[1:]))

    def test_mixing_is_monotone(self, small_losses: LossDistribution) -> None:
        curve = ReservoirChain(139, 15, small_losses).mixing_curve(steps=200)
        assert np.all(np.diff(curve) <= 1e-12)
        assert curve[-1] < curve[0]


class TestSizing:
    def test_minimum_is_tight(self, small_losses: LossDistribution) -> None:
        r = min_reservoir(15, small_losses)
        assert r is not None
        assert failure_probability(15, r, small_losses) < 1e-10
        assert failure_probability(15, r - 1, small_losses) >= 1e-10

    def test_no_loading_zones(self, small_losses: LossDistribution) -> None:
        assert min_reservoir(0, small_losses) is None

    def test_operating_point(self) -> None:
        curve = [
            CurvePoint(1, None),
            CurvePoint(2, 300),
            CurvePoint(3, 250),
            CurvePoint(4, 210),
            CurvePoint(5, 209),
            CurvePoint(6, 208),
        ]
        assert operating_point(curve) == CurvePoint(4, 210)
        assert operating_point(curve[:2]) is None

    @pytest.mark.slow
    @pytest.mark.parametrize("allocation", sorted(PUBLISHED_OPERATING_POINTS))
    def test_published_operating_points(self, allocation: tuple[int, int, int, int]) -> None:
        curve, point = size_reservoir(ComponentCounts(*allocation))
        assert point is not None
        ell, r = PUBLISHED_OPERATING_POINTS[allocation]
        assert (point.loading_zones, point.capacity) == (ell, r)
        if allocation == (20, 20, 40, 5):
            assert min(pt.capacity for pt in curve if pt.capacity is not None) >= 120


def test_allocation_parsing() -> None:
    assert ComponentCounts.parse("20,20,40,5").as_tuple() == (20, 20, 40, 5)
    with pytest.raises(WalkingCatError):
        ComponentCounts.parse("20,20,forty,5")
    with pytest.raises(WalkingCatError):
        ComponentCounts.parse("1,2,3")
