import pytest

from walkingcat import WalkingCatError
from walkingcat.estimator import (
    PUBLISHED_ALLOCATIONS,
    PUBLISHED_LT,
    PUBLISHED_OP_TIMES,
    ArchConfig,
    allocate,
    code_profile,
    estimate,
    factory_profile,
    measure_time,
    op_times,
    single_code_tradeoff,
    t_gates_per_day,
    transport,
)


class TestArchConfig:
    def test_parse(self) -> None:
        config = ArchConfig.parse("17xQ70+3xMEK")
        assert config == ArchConfig("Q70", 17, "MEK", 3)
        assert config.blocks == 20
        assert str(config) == "17xQ70+3xMEK"
        assert ArchConfig.parse("5 × q102 + 1 × ch2") == ArchConfig("Q102", 5, "CH2", 1)
        assert ArchConfig.parse("4xQ54").factory is None

    @pytest.mark.parametrize(
        "text, message",
        [
            ("17xQ70+3xFOO", "unknown block"),
            ("3xMEK", "names no memory code"),
            ("17xQ70+2xQ102", "more than one memory"),
            ("17xQ70+1xCH2+1xMEK", "more than one factory"),
            ("17 Q70", "malformed"),
        ],
    )
    def test_parse_errors(self, text: str, message: str) -> None:
        with pytest.raises(WalkingCatError, match=message):
            ArchConfig.parse(text)

    def test_validation(self) -> None:
        with pytest.raises(ValueError):
            ArchConfig("Q70", 0)
        with pytest.raises(ValueError):
            ArchConfig("Q70", 1, None, 2)

    def test_profiles(self) -> None:
        q102 = code_profile("Q102")
        assert (q102.n, q102.k, q102.width) == (102, 22, 30)
        assert q102.sec_time == pytest.approx(6.74e-3)
        with pytest.raises(WalkingCatError):
            code_profile("BB72")
        assert factory_profile("CH2").host.name == "Q54"


class TestAllocation:
    @pytest.mark.parametrize("text", sorted(PUBLISHED_ALLOCATIONS))
    def test_published_rows(self, text: str) -> None:
        row = PUBLISHED_ALLOCATIONS[text]
        config = ArchConfig.parse(text)
        allocation = allocate(config)
        assert (
            allocation.memory,
            allocation.magic,
            allocation.cat,
            allocation.bell,
            allocation.reservoir,
        ) == row[2:7]
        assert allocation.cat_transport == pytest.approx(row[7], rel=0.2)
        assert allocation.bell_transport == pytest.approx(row[8], rel=0.2)
        assert allocation.total == pytest.approx(row[9], rel=0.02)
        assert estimate(config).logical_qubits == row[0]

    def test_transport_layout(self) -> None:
        moving = transport(ArchConfig.parse("5xQ102+1xCH2"))
        assert moving.width == 162
        assert moving.height == 29
        assert moving.loop == 386
        assert moving.cat == 121
        assert moving.bell == 8

    def test_single_memory_block(self) -> None:
        allocation = allocate(ArchConfig("Q54", 1))
        assert allocation.memory == 172
        assert allocation.magic == 0
        assert allocation.cat == 32
        assert allocation.bell == 12
        assert allocation.reservoir == 200

    def test_percentages(self) -> None:
        allocation = allocate(ArchConfig.parse("17xQ70+3xMEK"))
        assert sum(allocation.percentages().values()) == pytest.approx(100.0)
        assert allocation.as_dict()["total"] == allocation.total


class TestOpTimes:
    @pytest.mark.parametrize("code", ["Q70", "Q102"])
    @pytest.mark.parametrize("kind", ["CH2", "MEK"])
    def test_published_times(self, code: str, kind: str) -> None:
        published = PUBLISHED_OP_TIMES[code]
        times = op_times(ArchConfig(code, 1, kind, 1))
        assert times.lz == pytest.approx(published["lz"], rel=0.03)
        assert times.dm == pytest.approx(published["dm"], rel=0.03)
        assert times.lm1 == pytest.approx(published["lm1"], rel=0.03)
        assert times.lm2 == pytest.approx(published["lm2"], rel=0.03)
        assert times.lt == pytest.approx(PUBLISHED_LT[kind], rel=0.03)
        assert times.t2 == pytest.approx(published[f"t2_{kind}"], rel=0.03)
        assert times.clif == 0.0

    def test_bucketing_rounds_weights_up(self) -> None:
        sec = code_profile("Q70").sec_time
        assert measure_time(36, sec, bucket=True) == pytest.approx(measure_time(54, sec))
        assert measure_time(80, sec, bucket=True) == pytest.approx(measure_time(54, sec))
        assert measure_time(36, sec) < measure_time(36, sec, bucket=True)


class TestThroughput:
    @pytest.mark.parametrize("text", sorted(PUBLISHED_ALLOCATIONS))
    def test_t_gates_per_day(self, text: str) -> None:
        assert t_gates_per_day(ArchConfig.parse(text)) == pytest.approx(
            PUBLISHED_ALLOCATIONS[text][1], rel=0.05
        )

    def test_no_factories(self) -> None:
        assert t_gates_per_day(ArchConfig("Q70", 3)) == 0.0

    def test_single_code_tradeoff(self) -> None:
        assert single_code_tradeoff(10, 10) == (60, 0.0)
        logical, t_day = single_code_tradeoff(41, 17)
        assert logical == 102
        assert t_day == pytest.approx(10.4e6, rel=0.05)
        assert single_code_tradeoff(41, 16)[1] > t_day
        with pytest.raises(ValueError):
            single_code_tradeoff(5, 6)


def test_estimate_as_dict() -> None:
    result = estimate("17xQ70+3xMEK").as_dict()
    assert result["config"] == "17xQ70+3xMEK"
    assert result["logical_qubits"] == 102
    assert set(result["op_times"]) >= {"lz", "lm1", "lm2", "t2"}
    assert result["allocation"]["memory"] == 3740
