import math

import numpy as np
import pytest

from walkingcat import CircuitError
from walkingcat.catbell import (
    BELL_FACTORY_QUBITS,
    CatRing,
    CatSpec,
    bell_loss_distribution,
    bell_sizing,
    cat_factory,
    cat_loss_distribution,
    cat_model,
    cat_prep_circuit,
    cat_sim,
    cat_verify_circuit,
    fit_weight_slope,
    required_rounds,
    stitch_circuit,
    stitch_model,
    stitch_rounds,
)
from walkingcat.schedule import Instruction, Moment
from walkingcat.simkit import NoiseParams, TableauSimulator, sample, to_stim


def pauli(w: int, letters: dict[int, str]) -> str:
    return "+" + "".join(letters.get(q, "I") for q in range(w))


class TestRounds:
    def test_required_rounds(self) -> None:
        assert required_rounds(1e-10, 1e-4) == 2
        assert required_rounds(1e-10, 1e-3) == 2
        assert required_rounds(1e-15, 1e-4) == 3

    def test_required_rounds_domain(self) -> None:
        with pytest.raises(ValueError, match="target precision"):
            required_rounds(0.0, 1e-4)
        with pytest.raises(ValueError, match="physical error rate"):
            required_rounds(1e-10, 0.5)

    def test_cat_spec_validation(self) -> None:
        assert CatSpec(w=30).rounds == 2
        assert CatSpec(w=30, m=0).rounds == 0
        with pytest.raises(ValueError, match="even"):
            CatSpec(w=7)
        with pytest.raises(ValueError, match="non-negative"):
            CatSpec(w=8, m=-1)


class TestCatModel:
    def test_weight_30(self) -> None:
        model = cat_model(CatSpec(w=30))
        assert model.m == 2
        assert model.prod_pocs == 14
        assert model.flow == 30
        assert model.reject_error == pytest.approx(1.5e-2)
        assert model.x_rate == pytest.approx(5e-5)
        assert model.z_rate == pytest.approx(4 * 3 * 1e-4 / 15)

    def test_leak_rejection_near_table(self) -> None:
        model = cat_model(CatSpec(w=30))
        assert model.reject_leak == pytest.approx(6.525e-3)
        assert model.reject_leak == pytest.approx(7.5e-3, rel=0.2)

    def test_rates_are_probabilities(self) -> None:
        model = cat_model(CatSpec(w=400, m=4, p=1e-2, p_leak=1e-2, p_loss=1e-4))
        for value in (model.x_rate, model.z_rate, model.reject_error, model.reject_total):
            assert 0.0 <= value <= 1.0
        assert model.acceptance >= 0.0

    def test_loss_peaks(self) -> None:
        dist = cat_loss_distribution(6, 2, 1e-7)
        assert dist[1] == pytest.approx(1.2e-6)
        assert dist[8] == pytest.approx(9.6e-6)
        # the 8m and 2w peaks both clip to the register
        assert dist[12] == pytest.approx(4e-7)
        assert set(cat_model(CatSpec(w=6, p_loss=1e-7)).loss_peaks()) == {1, 8, 12}

    def test_as_dict(self) -> None:
        data = cat_model(CatSpec(w=14)).as_dict()
        assert data["prod_pocs"] == 4 + 6 + 3
        assert data["prod_transport"] == 8
        assert "loss" not in data
        assert data["reject_total"] == pytest.approx(
            data["reject_error"] + data["reject_leak"] + data["reject_loss"]
        )


class TestRing:
    def test_shift_moves_clockwise(self) -> None:
        ring = CatRing(6)
        ring.shift(1)
        assert ring[1] == 0
        assert ring[0] == 3
        ring.shift(5)
        assert ring.qubits == tuple(range(6))

    def test_odd_weight(self) -> None:
        with pytest.raises(ValueError):
            CatRing(5)


class TestPreparation:
    @pytest.mark.parametrize("w", [2, 4, 6, 8, 10, 12])
    def test_noiseless_cat(self, w: int) -> None:
        sim = TableauSimulator(seed=1)
        sim.run(cat_prep_circuit(w))
        assert sim.peek_observable(pauli(w, {q: "X" for q in range(w)})) == 1
        for q in range(1, w):
            assert sim.peek_observable(pauli(w, {0: "Z", q: "Z"})) == 1

    @pytest.mark.parametrize("w", [2, 4, 6, 8, 14, 18, 30])
    def test_depth(self, w: int) -> None:
        circuit = cat_prep_circuit(w)
        layers = [m for m in circuit.moments if m.kind == "compute" and m.label == "prep"]
        assert len(layers) == math.ceil(math.log2(w))

    def test_two_qubit_cat(self) -> None:
        circuit = cat_prep_circuit(2)
        assert [m.kind for m in circuit.moments] == ["compute", "compute"]
        assert circuit.moments[1].instructions == (Instruction("CX", (0, 1)),)


class TestVerification:
    def test_noiseless_detectors_are_quiet(self) -> None:
        factory = cat_factory(8, 2)
        dets = to_stim(factory.circuit).compile_detector_sampler(seed=0).sample(16)
        assert dets.shape == (16, 16)
        assert not dets.any()

    def test_depth_and_transport(self) -> None:
        factory = cat_factory(30, 2)
        assert factory.verification_depth() == 3 * 2 + 2
        assert factory.verification_transport() == 2

    def test_ldu_only(self) -> None:
        factory = cat_factory(8, 0)
        assert factory.checks == []
        assert len(factory.tail) == 8
        assert cat_verify_circuit(8, 0).detectors == []
        with pytest.raises(ValueError):
            cat_factory(8, -1)

    @pytest.mark.parametrize("qubit", [3, 5, 7])
    def test_injected_x_fault_is_caught(self, qubit: int) -> None:
        factory = cat_factory(8, 1)
        fault = Moment((Instruction("X_ERROR", (qubit,), (1.0,)),), duration=0.0)
        factory.circuit.moments.insert(1, fault)
        result = sample(factory.circuit, NoiseParams.noiseless(), 8, threads=1)
        assert result.detectors.any(axis=1).all()
        assert result.detectors.sum(axis=1).min() >= 2


class TestStitching:
    def test_noiseless_parities_agree(self) -> None:
        stitch = stitch_circuit(4, 6, 3)
        dets = to_stim(stitch.circuit).compile_detector_sampler(seed=0).sample(16)
        assert dets.shape == (16, 2)
        assert not dets.any()
        assert stitch.second == tuple(range(4, 10))

    def test_bounds(self) -> None:
        with pytest.raises(CircuitError):
            stitch_circuit(4, 4, 0)
        with pytest.raises(CircuitError):
            stitch_circuit(4, 2, 3)

    def test_model(self) -> None:
        assert stitch_rounds(1e-10, 1e-4) == 4
        model = stitch_model()
        assert model.m == 4
        assert model.reject == pytest.approx(1.6e-3)
        with pytest.raises(ValueError):
            stitch_rounds(1e-10, 0.3)


class TestBell:
    def test_sizing(self) -> None:
        sizing = bell_sizing(20)
        assert sizing.factories == 7
        assert sizing.qubits == 7 * BELL_FACTORY_QUBITS
        assert sizing.flow == 6
        assert bell_sizing(0).factories == 0
        with pytest.raises(ValueError):
            bell_sizing(-1)

    def test_loss(self) -> None:
        dist = bell_loss_distribution()
        assert dist[2] == pytest.approx(3.6e-6)
        assert dist.mean == pytest.approx(7.2e-6)


class TestCatSim:
    def test_noiseless(self) -> None:
        result = cat_sim(6, 1, NoiseParams.noiseless(), 64, threads=1)
        assert result.acceptance == 1.0
        assert result.x_weights[0] == 64
        assert result.z_errors == 0
        assert result.rows()[0] == {"weight": 0, "count": 64, "rate": 1.0}

    def test_rejection_below_heuristic(self) -> None:
        p = 1e-3
        result = cat_sim(10, 2, NoiseParams(p=p), 4000, seed=3, threads=2)
        assert 0.0 < result.rejection <= (2 * 2 + 1) * 10 * p * 1.2

    @pytest.mark.slow
    def test_weight_one_slope(self) -> None:
        ps = [1e-3, 3e-3]
        rates = [cat_sim(10, 2, NoiseParams(p=p), 200_000, seed=1).x_rate(1) for p in ps]
        assert fit_weight_slope(ps, rates) == pytest.approx(1.0, abs=0.3)

    def test_slope_fit(self) -> None:
        ps = np.array([1e-3, 2e-3, 4e-3])
        assert fit_weight_slope(ps, ps**2) == pytest.approx(2.0)
        with pytest.raises(ValueError):
            fit_weight_slope([1e-3, 2e-3], [0.0, 1e-6])
