import json
import math

import numpy as np
import pytest

from walkingcat import CircuitError
from walkingcat.codes import get_code, toy_bb18
from walkingcat.schedule import (
    Circuit,
    Instruction,
    Moment,
    compile_sec,
    find_deterministic_schedule,
    memory_experiment,
    published_schedule,
)
from walkingcat.simkit import (
    PUBLISHED_ANSATZ,
    AnsatzFit,
    LossDistribution,
    NoiseParams,
    TableauSimulator,
    compound_poisson_loss,
    compound_poisson_monte_carlo,
    error_model,
    fit_ansatz,
    merge_probability,
    noise_channels,
    published_loss_distribution,
    reload_overhead,
    sample,
    sec_exposure,
    sec_loss_distribution,
    to_stim,
    undetectable_logical_faults,
)


def bb18_memory(rounds: int = 2, augment: str = "none", basis: str = "Z") -> Circuit:
    code = toy_bb18()
    schedule = find_deterministic_schedule(code)
    assert schedule is not None
    return memory_experiment(code, schedule, rounds, augment=augment, basis=basis)


class TestNoiseParams:
    def test_derived_rates(self) -> None:
        noise = NoiseParams(p=1e-3)
        assert noise.p1 == pytest.approx(1e-4)
        assert noise.p_idle == pytest.approx(1e-5)
        assert noise.p_transport == pytest.approx(5e-7)
        assert noise.transport(0) == 0.0
        assert noise.transport(2) == pytest.approx(1 - (1 - 5e-7) ** 2)

    def test_scaled(self) -> None:
        noise = NoiseParams.scaled(1e-3, loss_ratio=1e-3, leak_ratio=0.1)
        assert noise.p_loss == pytest.approx(1e-6)
        assert noise.p_leak == pytest.approx(1e-4)

    def test_validation(self) -> None:
        with pytest.raises(ValueError, match="p_loss"):
            NoiseParams(p_loss=2.0)
        with pytest.raises(ValueError, match="positive"):
            NoiseParams(poc_time=0.0)


class TestNoiseChannels:
    def test_noiseless(self) -> None:
        moment = Moment((Instruction("CX", (0, 1)),))
        assert noise_channels(moment, NoiseParams.noiseless(), 3) == ([], [])

    def test_gate_and_idle(self) -> None:
        moment = Moment((Instruction("CX", (0, 1)),), duration=2.0)
        before, after = noise_channels(moment, NoiseParams(p=1e-3), 3)
        assert before == []
        assert after[0] == Instruction("DEPOLARIZE2", (0, 1), (1e-3,))
        assert after[1].name == "DEPOLARIZE1"
        assert after[1].targets == (2,)
        assert after[1].args[0] == pytest.approx(2e-5)

    def test_measurement_flip_comes_first(self) -> None:
        moment = Moment((Instruction("MX", (0,), reset="X"),))
        before, after = noise_channels(moment, NoiseParams(p=1e-3), 1)
        assert [i.name for i in before] == ["Z_ERROR"]
        assert [i.name for i in after] == ["Z_ERROR"]

    def test_shift_noise(self) -> None:
        moment = Moment((Instruction("SHIFT", (0,), (40.0,)),), 2.0, "transport")
        noise = NoiseParams(p=1e-3)
        _, after = noise_channels(moment, noise, 1)
        assert after[0].args[0] == pytest.approx(noise.transport(40))


class TestStim:
    @pytest.mark.parametrize("augment", ["none", "beacon", "beacon+LDU"])
    def test_noiseless_detectors_are_quiet(self, augment: str) -> None:
        circuit = bb18_memory(augment=augment)
        sampler = to_stim(circuit).compile_detector_sampler(seed=1)
        dets, obs = sampler.sample(20, separate_observables=True)
        assert not dets.any()
        assert not obs.any()

    def test_x_basis(self) -> None:
        circuit = bb18_memory(basis="X")
        dets = to_stim(circuit).compile_detector_sampler(seed=1).sample(20)
        assert not dets.any()

    def test_error_model(self) -> None:
        model = error_model(bb18_memory(), NoiseParams(p=1e-3))
        assert model.num_faults > 0
        assert model.check.shape[1] == model.num_faults
        assert np.all((model.priors > 0) & (model.priors < 0.5))
        assert undetectable_logical_faults(model) == []

    def test_error_model_needs_detectors(self) -> None:
        with pytest.raises(CircuitError, match="no detectors"):
            error_model(Circuit(1), NoiseParams())

    def test_merge_probability(self) -> None:
        assert merge_probability(0.1, 0.2) == pytest.approx(0.26)
        assert merge_probability(0.0, 0.3) == pytest.approx(0.3)

    def test_tableau_reference(self) -> None:
        circuit = Circuit(2)
        circuit.append([Instruction("RX", (0,)), Instruction("RZ", (1,))])
        circuit.append([Instruction("CX", (0, 1))])
        sim = TableauSimulator(seed=3)
        sim.run(circuit)
        assert sim.peek_observable("+XX") == 1
        assert sim.peek_observable("+ZZ") == 1


class TestFrameSimulator:
    def test_noiseless_sampling(self) -> None:
        result = sample(bb18_memory(augment="beacon+LDU"), NoiseParams.noiseless(), 64, threads=1)
        assert result.shots == 64
        assert not result.detectors.any()
        assert result.logical_error_rate() == 0.0

    def test_independent_of_threads(self) -> None:
        circuit = bb18_memory()
        noise = NoiseParams(p=5e-3)
        a = sample(circuit, noise, 2500, seed=9, threads=1)
        b = sample(circuit, noise, 2500, seed=9, threads=3)
        assert np.array_equal(a.detectors, b.detectors)
        assert np.array_equal(a.observables, b.observables)

    def test_agrees_with_stim(self) -> None:
        circuit = bb18_memory()
        noise = NoiseParams(p=1e-2)
        frame = sample(circuit, noise, 4000, seed=2, threads=2).detectors.mean()
        reference = to_stim(circuit, noise).compile_detector_sampler(seed=2).sample(4000).mean()
        assert frame == pytest.approx(reference, rel=0.15)

    def test_loss_is_tracked(self) -> None:
        circuit = bb18_memory(rounds=3, augment="beacon")
        result = sample(circuit, NoiseParams(p=0.0, p_loss=0.01), 200, threads=1)
        assert result.lost.sum() > 0
        assert result.beacon_flags.sum() > 0
        assert np.all(np.diff(result.loss_trace, axis=1) >= 0)
        assert result.lost_flags.shape == (200, circuit.num_measurements)

    def test_leakage_is_flagged(self) -> None:
        circuit = bb18_memory(rounds=2, augment="beacon+LDU")
        result = sample(circuit, NoiseParams(p=0.0, p_leak=0.01), 200, threads=1)
        assert result.leaked.sum() > 0
        assert result.leak_flags.any()

    def test_needs_annotations(self) -> None:
        with pytest.raises(CircuitError):
            sample(Circuit(1), NoiseParams(), 10)

    def test_write(self, tmp_path) -> None:
        result = sample(bb18_memory(), NoiseParams(p=1e-3), 10, threads=1)
        sidecar = result.write(tmp_path / "dets.b8")
        meta = json.loads(sidecar.read_text())
        assert meta["shots"] == 10
        assert meta["detectors"] == result.detectors.shape[1]
        assert (tmp_path / "dets.b8").stat().st_size == 10 * math.ceil(meta["detectors"] / 8)


class TestLossStatistics:
    def test_published_table(self) -> None:
        dist = published_loss_distribution("Q70")
        assert dist[0] == pytest.approx(0.999580, abs=1e-6)
        assert dist[3] == pytest.approx(4.07e-4)
        assert dist[7] == pytest.approx(1.23e-11)
        assert dist[12] == 0.0
        assert dist.reload_probability == pytest.approx(1 - dist[0])

    def test_published_table_errors(self) -> None:
        with pytest.raises(CircuitError):
            published_loss_distribution("BB72")
        with pytest.raises(ValueError):
            published_loss_distribution("Q70", overflow=5)

    def test_distribution_must_sum_to_one(self) -> None:
        with pytest.raises(ValueError, match="sums to"):
            LossDistribution(np.array([0.5, 0.4]))

    def test_compound_poisson(self) -> None:
        lam, sec = 0.5, 4.0
        dist = compound_poisson_loss(lam, sec, 1.0, max_lost=6)
        assert dist[0] == pytest.approx(math.exp(-lam))
        assert dist[1] == pytest.approx(lam * math.exp(-lam) / sec)
        assert dist[3] == pytest.approx(lam * math.exp(-lam) * (1 - 1 / sec), rel=2e-3)
        assert dist.pmf.sum() + dist.tail == pytest.approx(1.0)

    def test_monte_carlo_matches(self) -> None:
        lam, sec = 0.5, 4.0
        draws = compound_poisson_monte_carlo(lam, sec, 200_000, seed=5)
        dist = compound_poisson_loss(lam, sec, 1.0)
        assert np.mean(draws == 0) == pytest.approx(dist[0], abs=5e-3)
        assert np.mean(draws == 3) == pytest.approx(dist[3], abs=5e-3)

    def test_no_loss(self) -> None:
        dist = compound_poisson_loss(100.0, 20.0, 0.0)
        assert dist[0] == 1.0
        assert dist.mean == 0.0
        with pytest.raises(ValueError):
            compound_poisson_loss(1.0, 0.5, 1e-6)

    def test_exposure(self) -> None:
        code = get_code("Q70")
        sec = compile_sec(code, published_schedule("Q70"))
        assert sec_exposure(sec, code.n) == pytest.approx(2 * code.n * sec.budget.total)
        beacon = compile_sec(code, published_schedule("Q70"), augment="beacon")
        extra = sec_exposure(beacon, code.n) - 2 * code.n * beacon.budget.total
        assert extra == pytest.approx(code.n * 6)

    def test_q70_sec_loss(self) -> None:
        code = get_code("Q70")
        sec = compile_sec(code, published_schedule("Q70"), augment="beacon+LDU")
        dist = sec_loss_distribution(sec, code.n, 1e-7)
        assert dist[3] == pytest.approx(4.07e-4, rel=0.1)
        # a single lost qubit needs the strike to land in the final layer, so
        # P(1)/P(3) is fixed at 1/(T-1); the tabulated 1.30e-5 is sampled
        assert dist[1] == pytest.approx(dist[3] / (sec.budget.total - 1), rel=1e-6)
        assert dist[1] == pytest.approx(1.55e-5, rel=0.01)

    def test_reload_overhead(self) -> None:
        assert reload_overhead(10, 0.01, 30.0) == pytest.approx(0.15 * 10 * 0.01 / 30)
        with pytest.raises(ValueError):
            reload_overhead(10, 1.5, 30.0)


class TestAnsatz:
    def test_fit_recovers_parameters(self) -> None:
        truth = PUBLISHED_ANSATZ[("Q70", "(0,0)")]
        points = [(p, float(truth(p))) for p in (1e-3, 2e-3, 3e-3, 4e-3, 5e-3)]
        fit = fit_ansatz(points, truth.d_circ)
        assert fit.alpha == pytest.approx(truth.alpha, rel=1e-4)
        assert fit.beta == pytest.approx(truth.beta, rel=1e-4)
        assert fit.zeta == pytest.approx(truth.zeta, rel=1e-5)

    def test_effective_factor(self) -> None:
        fit = AnsatzFit(0.0, 0.0, 1.0, 5)
        assert fit.effective_factor(1e-3, float(fit(2e-3))) == pytest.approx(2.0)

    def test_fit_errors(self) -> None:
        with pytest.raises(ValueError, match="three points"):
            fit_ansatz([(1e-3, 1e-9)], 9)
        with pytest.raises(ValueError, match="positive"):
            fit_ansatz([(1e-3, 1e-9), (2e-3, 0.0), (3e-3, 1e-8)], 9)
