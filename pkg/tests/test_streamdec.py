import dataclasses

import numpy as np
import pytest

from walkingcat import StreamError
from walkingcat.codes import toy_bb18
from walkingcat.gf2 import BitMatrix
from walkingcat.schedule import Circuit, find_deterministic_schedule, memory_experiment
from walkingcat.simkit import NoiseParams, sample
from walkingcat.streamdec import (
    LatencyTrace,
    MinSumDecoder,
    StreamingDecoder,
    WindowConfig,
    assemble,
    build_staircase,
    detector_order,
    global_decode,
    init_windows,
    inner_bp,
    merge_columns,
    phenomenological_model,
    stream_decode,
    window_plan,
)


def repetition(n: int = 5) -> tuple[np.ndarray, np.ndarray]:
    h = np.zeros((n - 1, n), dtype=np.uint8)
    for i in range(n - 1):
        h[i, i] = h[i, i + 1] = 1
    logical = np.zeros((1, n), dtype=np.uint8)
    logical[0, 0] = 1
    return h, logical


@pytest.fixture
def rep_model():
    h, logical = repetition()
    return phenomenological_model(h, logical, 0.01, 0.01)


class TestWindows:
    def test_plan(self) -> None:
        assert window_plan(10, 5, 3) == (3, 4)
        assert window_plan(1_000_008, 5, 3) == (333_336, 3)
        assert window_plan(6, 5, 3) == (2, 3)
        assert window_plan(4, 5, 3) == (1, 4)
        with pytest.raises(ValueError):
            window_plan(0, 5, 3)

    def test_config(self) -> None:
        assert WindowConfig.parse("5,3") == WindowConfig(5, 3)
        with pytest.raises(ValueError, match="c < w"):
            WindowConfig(3, 3)
        with pytest.raises(ValueError, match="w,c"):
            WindowConfig.parse("5")

    def test_assembled_shape(self, rep_model) -> None:
        whole = assemble(rep_model, 6)
        assert whole.h.shape == (24, 54)
        assert whole.priors.shape == (54,)
        assert whole.observables.shape == (1, 54)
        assert rep_model.block_sizes(3) == [5, 4, 5, 4, 9]

    def test_window_types(self, rep_model) -> None:
        windows = init_windows(rep_model, 3, 1, 6)
        assert (windows.n_windows, windows.w_last) == (4, 3)
        assert windows.first.h.shape[0] == 12
        assert windows.last.num_columns == 5 + 4 + 5 + 4 + 9
        with pytest.raises(StreamError):
            init_windows(rep_model, 3, 1, 1)

    def test_block_validation(self, rep_model) -> None:
        with pytest.raises(StreamError, match="priors"):
            dataclasses.replace(rep_model, p0=np.zeros(2))


class TestInnerDecoder:
    def test_single_error(self) -> None:
        h, _ = repetition(7)
        error = np.zeros(7, dtype=np.uint8)
        error[3] = 1
        syndrome = h @ error % 2
        found = inner_bp(h, np.full(7, 0.01), syndrome)
        assert np.array_equal(found, error)

    def test_zero_syndrome(self) -> None:
        h, _ = repetition()
        decoder = MinSumDecoder(h, np.full(5, 0.01))
        assert not decoder.decode(np.zeros(4, dtype=np.uint8)).any()
        assert decoder.converged

    def test_osd_reproduces_the_syndrome(self) -> None:
        rng = np.random.default_rng(3)
        h = rng.integers(0, 2, size=(12, 30), dtype=np.uint8)
        error = (rng.random(30) < 0.1).astype(np.uint8)
        syndrome = h @ error % 2
        decoder = MinSumDecoder(h, np.full(30, 0.1), iters=5)
        found = decoder.decode(syndrome)
        assert np.array_equal(decoder.syndrome(found), syndrome)

    def test_prior_shape(self) -> None:
        with pytest.raises(ValueError):
            MinSumDecoder(np.eye(3, dtype=np.uint8), [0.1, 0.1])

    def test_syndrome_length(self) -> None:
        decoder = MinSumDecoder(np.eye(3, dtype=np.uint8), [0.1, 0.1, 0.1])
        with pytest.raises(ValueError, match="expected 3"):
            decoder.decode(np.zeros(2, dtype=np.uint8))

    def test_plain_bp(self) -> None:
        h, _ = repetition(7)
        error = np.zeros(7, dtype=np.uint8)
        error[2] = 1
        decoder = MinSumDecoder(h, np.full(7, 0.01), osd0=False)
        assert np.array_equal(decoder.decode(h @ error % 2), error)
        assert decoder.converged

    def test_merge_columns(self) -> None:
        h = BitMatrix.from_dense([[1, 1, 0], [0, 0, 1]])
        obs = BitMatrix.from_dense([[1, 1, 0]])
        merged, priors, merged_obs = merge_columns(h, np.array([0.1, 0.2, 0.3]), obs)
        assert merged.shape == (2, 2)
        assert priors[0] == pytest.approx(0.1 * 0.8 + 0.2 * 0.9)
        assert merged_obs.dense.tolist() == [[1, 0]]


class TestStreamingDecoder:
    def test_clean_stream(self, rep_model) -> None:
        result = stream_decode(rep_model, WindowConfig(3, 1), np.zeros(24), 6)
        assert not result.error.any()
        assert result.observables.tolist() == [0]
        assert len(result.trace.window_us) == 4

    def test_single_data_error(self, rep_model) -> None:
        whole = assemble(rep_model, 6)
        error = np.zeros(whole.num_columns, dtype=np.uint8)
        # qubit 0 of the data block before round 3
        error[5 + 4 + 5 + 4 + 5 + 4] = 1
        detectors = whole.h @ error % 2
        for decode in (
            lambda d: stream_decode(rep_model, WindowConfig(3, 1), d, 6),
            lambda d: global_decode(rep_model, d, 6),
        ):
            assert decode(detectors).observables.tolist() == [1]

    def test_measurement_error_is_not_logical(self, rep_model) -> None:
        whole = assemble(rep_model, 6)
        error = np.zeros(whole.num_columns, dtype=np.uint8)
        error[5 + 4 + 5 + 1] = 1
        detectors = whole.h @ error % 2
        result = stream_decode(rep_model, WindowConfig(4, 2), detectors, 6)
        assert result.observables.tolist() == [0]

    def test_single_window_matches_global(self, rep_model) -> None:
        rng = np.random.default_rng(11)
        for _ in range(50):
            detectors = (rng.random(24) < 0.1).astype(np.uint8)
            streamed = stream_decode(rep_model, WindowConfig(6, 5), detectors, 6)
            whole = global_decode(rep_model, detectors, 6)
            assert np.array_equal(streamed.error, whole.error)
            assert np.array_equal(streamed.observables, whole.observables)

    def test_committed_error_explains_detectors(self, rep_model) -> None:
        whole = assemble(rep_model, 6)
        rng = np.random.default_rng(5)
        decoder = StreamingDecoder(rep_model, WindowConfig(3, 1), 6)
        for _ in range(100):
            error = (rng.random(whole.num_columns) < whole.priors).astype(np.uint8)
            detectors = whole.h @ error % 2
            result = decoder.decode(detectors)
            assert np.array_equal(whole.h @ result.error % 2, detectors)

    def test_short_stream(self, rep_model) -> None:
        with pytest.raises(StreamError, match="expected 24"):
            stream_decode(rep_model, WindowConfig(3, 1), np.zeros(20), 6)

    def test_latency_summary(self) -> None:
        trace = LatencyTrace([10.0, 20.0, 5.0], [0, 1, 0], commit=2)
        summary = trace.summary()
        assert summary["reaction_us"] == 5.0
        assert summary["mean_us"] == pytest.approx(7.5)
        assert trace.rows()[1] == (1, 20.0, 1)


class TestCircuitStaircase:
    @pytest.fixture(scope="class")
    def circuit(self) -> Circuit:
        code = toy_bb18()
        schedule = find_deterministic_schedule(code)
        assert schedule is not None
        return memory_experiment(code, schedule, rounds=4)

    def test_detector_order(self, circuit) -> None:
        order = detector_order(circuit)
        assert len(order) == 9 * 5
        rounds = [circuit.detector_info[j].round for j in order]
        assert rounds == sorted(rounds)
        assert {circuit.detector_info[j].basis for j in order} == {"Z"}

    def test_build_and_decode(self, circuit) -> None:
        noise = NoiseParams(p=2e-3)
        model = build_staircase(circuit, noise)
        assert model.detectors_per_round == 9
        assert model.num_observables == 2
        shots = sample(circuit, noise, 100, seed=4, threads=1)
        stream = shots.detectors[:, detector_order(circuit)]
        decoder_failures = 0
        for dets, truth in zip(stream, shots.observables):
            result = stream_decode(model, WindowConfig(3, 1), dets, 5)
            decoder_failures += int(not np.array_equal(result.observables, truth))
        assert decoder_failures <= 10

    @pytest.mark.slow
    def test_streaming_stays_within_twice_global(self) -> None:
        code = toy_bb18()
        schedule = find_deterministic_schedule(code)
        assert schedule is not None
        circuit = memory_experiment(code, schedule, rounds=12)
        noise = NoiseParams(p=1e-2)
        model = build_staircase(circuit, noise)
        shots = sample(circuit, noise, 2000, seed=9, threads=1)
        stream = shots.detectors[:, detector_order(circuit)]
        decoder = StreamingDecoder(model, WindowConfig(5, 3), 13)
        streamed = wrong = 0
        for dets, truth in zip(stream, shots.observables):
            streamed += int(not np.array_equal(decoder.decode(dets).observables, truth))
            wrong += int(not np.array_equal(global_decode(model, dets, 13).observables, truth))
        assert wrong > 0
        assert streamed <= 2 * wrong

    def test_needs_round_information(self) -> None:
        with pytest.raises(StreamError):
            build_staircase(Circuit(1), NoiseParams())
