"""Noise model, Monte Carlo sampling with loss and leakage, loss statistics.

Pauli noise is attached to a :class:`~walkingcat.schedule.Circuit` moment
by moment through :func:`noise_channels`. The same expansion feeds both
the vectorised :class:`FrameSimulator`, which also tracks lost and leaked
qubits, and the ``stim`` conversion used for detector error models.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import enum
import json
import logging
import math
import pathlib
import typing

import numpy as np
import numpy.typing as npt
import scipy.optimize
import scipy.stats
import stim
from scipy import sparse

from walkingcat import CircuitError, Settings
from walkingcat.schedule import (
    ERROR_OPS,
    GATE1_OPS,
    TRANSPORT_STEPS_PER_POC,
    Circuit,
    CompiledSec,
    Instruction,
    Moment,
)

log = logging.getLogger("walkingcat.simkit")

BATCH_SHOTS = 1024


@dataclasses.dataclass(frozen=True)
class NoiseParams:
    """Moving-qubit noise model.

    ``p`` is the two-qubit depolarizing rate; preparation, single-qubit
    gates, measurement and leakage reset fail at ``p/10``; idling costs
    ``p/100`` per POC and every transport step ``p/2000``. Loss and
    leakage strike every qubit at ``p_loss`` and ``p_leak`` per POC.
    """

    p: float = 1e-4
    p_loss: float = 0.0
    p_leak: float = 0.0
    poc_time: float = 200e-6
    transport_step_time: float = 10e-6

    def __post_init__(self) -> None:
        for name in ("p", "p_loss", "p_leak"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.poc_time <= 0 or self.transport_step_time <= 0:
            raise ValueError("operation times must be positive")

    @property
    def p1(self) -> float:
        return self.p / 10

    @property
    def p_idle(self) -> float:
        return self.p / 100

    @property
    def p_transport(self) -> float:
        return self.p / 2000

    def transport(self, steps: int) -> float:
        return 1.0 - (1.0 - self.p_transport) ** steps

    @classmethod
    def noiseless(cls) -> NoiseParams:
        return cls(p=0.0)

    @classmethod
    def scaled(cls, p: float, loss_ratio: float = 0.0, leak_ratio: float = 0.0) -> NoiseParams:
        """``(p/1000, p/10)`` style configurations."""
        return cls(p=p, p_loss=p * loss_ratio, p_leak=p * leak_ratio)


class QubitStatus(enum.IntEnum):
    COMPUTATIONAL = 0
    LEAKED = 1
    LOST = 2


# noise expansion


def noise_channels(
    moment: Moment, noise: NoiseParams, num_qubits: int
) -> tuple[list[Instruction], list[Instruction]]:
    """Pauli channels applied before and after ``moment``."""
    before: list[Instruction] = []
    after: list[Instruction] = []
    if noise.p == 0.0:
        return before, after
    busy: set[int] = set()
    for ins in moment.instructions:
        t = ins.targets
        if ins.name == "LOSS_CHECK" or ins.name in ERROR_OPS:
            continue
        if ins.name == "SHIFT":
            after.append(Instruction("DEPOLARIZE1", t, (noise.transport(int(ins.args[0])),)))
        elif ins.name in ("CX", "CZ"):
            after.append(Instruction("DEPOLARIZE2", t, (noise.p,)))
        elif ins.name in GATE1_OPS or ins.name == "LEAK_RESET":
            after.append(Instruction("DEPOLARIZE1", t, (noise.p1,)))
        elif ins.name == "RX":
            after.append(Instruction("Z_ERROR", t, (noise.p1,)))
        elif ins.name == "RZ":
            after.append(Instruction("X_ERROR", t, (noise.p1,)))
        elif ins.name in ("MX", "MZ"):
            flip = "Z_ERROR" if ins.name == "MX" else "X_ERROR"
            before.append(Instruction(flip, t, (noise.p1,)))
            if ins.reset is not None:
                kind = "Z_ERROR" if ins.reset == "X" else "X_ERROR"
                after.append(Instruction(kind, t, (noise.p1,)))
        busy.update(t)
    idle = tuple(q for q in range(num_qubits) if q not in busy)
    if idle:
        rate = noise.p_idle * moment.duration
        if rate > 0:
            after.append(Instruction("DEPOLARIZE1", idle, (min(rate, 0.75),)))
    return before, after


# stim interface


def _stim_ops(ins: Instruction) -> list[tuple[str, tuple[int, ...], tuple[float, ...]]]:
    t = ins.targets
    if ins.name in ("SHIFT", "LOSS_CHECK", "LEAK_RESET"):
        return []
    if ins.name == "RZ":
        return [("R", t, ())]
    if ins.name in ("MX", "MZ"):
        base = "MX" if ins.name == "MX" else "M"
        if ins.reset is None:
            return [(base, t, ())]
        if (ins.name, ins.reset) == ("MX", "X"):
            return [("MRX", t, ())]
        if (ins.name, ins.reset) == ("MZ", "Z"):
            return [("MR", t, ())]
        return [(base, t, ()), ("RX" if ins.reset == "X" else "R", t, ())]
    return [(ins.name, t, ins.args)]


def to_stim(circuit: Circuit, noise: typing.Optional[NoiseParams] = None) -> stim.Circuit:
    """Translate to a ``stim.Circuit`` with detectors and observables.

    Transport and loss checks only contribute their Pauli noise.
    """
    out = stim.Circuit()
    noise = noise or NoiseParams.noiseless()
    for moment in circuit.moments:
        before, after = noise_channels(moment, noise, circuit.num_qubits)
        for ins in [*before, *moment.instructions, *after]:
            for name, targets, args in _stim_ops(ins):
                if args and args[0] == 0.0 and name in ERROR_OPS:
                    continue
                out.append(name, targets, args)
        out.append("TICK")
    total = circuit.num_measurements
    for det in circuit.detectors:
        out.append("DETECTOR", [stim.target_rec(i - total) for i in det])
    for k, obs in enumerate(circuit.observables):
        out.append("OBSERVABLE_INCLUDE", [stim.target_rec(i - total) for i in obs], k)
    return out


@dataclasses.dataclass
class ErrorModel:
    """Detector error model with identical columns merged."""

    check: sparse.csc_matrix
    """Detectors × faults."""
    observables: sparse.csc_matrix
    priors: npt.NDArray[np.float64]

    @property
    def num_faults(self) -> int:
        return int(self.priors.shape[0])

    def column(self, j: int) -> tuple[frozenset[int], frozenset[int]]:
        dets = frozenset(int(i) for i in self.check[:, j].indices)
        obs = frozenset(int(i) for i in self.observables[:, j].indices)
        return dets, obs


def merge_probability(p: float, q: float) -> float:
    """Probability that exactly one of two independent faults fires."""
    return p * (1 - q) + q * (1 - p)


def _columns_to_csc(columns: list[frozenset[int]], rows: int) -> sparse.csc_matrix:
    indices = [i for col in columns for i in sorted(col)]
    indptr = np.cumsum([0] + [len(c) for c in columns])
    data = np.ones(len(indices), dtype=np.uint8)
    return sparse.csc_matrix((data, indices, indptr), shape=(rows, len(columns)))


def error_model(circuit: Circuit, noise: NoiseParams) -> ErrorModel:
    """Propagate every single Pauli fault of ``circuit`` to detectors.

    :raises CircuitError: if the circuit carries no detectors.
    """
    if not circuit.detectors:
        raise CircuitError("circuit has no detectors")
    dem = to_stim(circuit, noise).detector_error_model(
        decompose_errors=False, approximate_disjoint_errors=True
    )
    index: dict[tuple[frozenset[int], frozenset[int]], int] = {}
    priors: list[float] = []
    for instruction in dem.flattened():
        if instruction.type != "error":
            continue
        p = instruction.args_copy()[0]
        dets: list[int] = []
        obs: list[int] = []
        for t in instruction.targets_copy():
            if t.is_relative_detector_id():
                dets.append(t.val)
            elif t.is_logical_observable_id():
                obs.append(t.val)
        key = (frozenset(dets), frozenset(obs))
        if key in index:
            j = index[key]
            priors[j] = merge_probability(priors[j], p)
        else:
            index[key] = len(priors)
            priors.append(p)
    keys = list(index)
    model = ErrorModel(
        _columns_to_csc([k[0] for k in keys], len(circuit.detectors)),
        _columns_to_csc([k[1] for k in keys], len(circuit.observables)),
        np.asarray(priors, dtype=np.float64),
    )
    log.info("error model: %d detectors, %d faults", len(circuit.detectors), model.num_faults)
    return model


def undetectable_logical_faults(model: ErrorModel) -> list[int]:
    """Fault columns that flip an observable without flipping a detector."""
    det_weight = np.diff(model.check.indptr)
    obs_weight = np.diff(model.observables.indptr)
    return [int(j) for j in np.flatnonzero((det_weight == 0) & (obs_weight > 0))]


class TableauSimulator:
    """Noiseless reference execution backed by ``stim.TableauSimulator``."""

    def __init__(self, seed: typing.Optional[int] = None) -> None:
        self._sim = stim.TableauSimulator(seed=seed)

    def run(self, circuit: Circuit) -> npt.NDArray[np.bool_]:
        self._sim.do_circuit(to_stim(circuit.without_noise()))
        return np.asarray(self._sim.current_measurement_record(), dtype=np.bool_)

    def peek_observable(self, pauli: str) -> int:
        return int(self._sim.peek_observable_expectation(stim.PauliString(pauli)))

    @staticmethod
    def parities(
        record: npt.NDArray[np.bool_], groups: typing.Sequence[tuple[int, ...]]
    ) -> npt.NDArray[np.bool_]:
        return np.array([np.bitwise_xor.reduce(record[list(g)]) if g else False for g in groups])


# frame simulation


@dataclasses.dataclass
class SampleResult:
    detectors: npt.NDArray[np.bool_]
    """Shots × detectors."""
    observables: npt.NDArray[np.bool_]
    lost: npt.NDArray[np.int64]
    """Cumulative loss events per shot."""
    leaked: npt.NDArray[np.int64]
    """Leakage events per shot."""
    lost_flags: npt.NDArray[np.bool_]
    """Shots × measurements: the measured qubit was lost."""
    leak_flags: npt.NDArray[np.bool_]
    beacon_flags: npt.NDArray[np.int64]
    """Loss detections by beacon checks per shot."""
    loss_trace: npt.NDArray[np.int64]
    """Shots × moments, cumulative loss events after each moment."""

    @property
    def shots(self) -> int:
        return int(self.detectors.shape[0])

    @classmethod
    def concatenate(cls, parts: typing.Sequence[SampleResult]) -> SampleResult:
        fields = [f.name for f in dataclasses.fields(cls)]
        return cls(**{name: np.concatenate([getattr(p, name) for p in parts]) for name in fields})

    def logical_error_rate(self) -> float:
        if self.shots == 0:
            return 0.0
        return float(np.mean(self.observables.any(axis=1)))

    def write(self, path: typing.Union[str, pathlib.Path]) -> pathlib.Path:
        """Bit-packed detector rows plus a JSON sidecar of loss/leak counts."""
        path = pathlib.Path(path)
        np.packbits(self.detectors, axis=1, bitorder="little").tofile(path)
        sidecar = path.with_suffix(path.suffix + ".json")
        sidecar.write_text(
            json.dumps(
                {
                    "shots": self.shots,
                    "detectors": int(self.detectors.shape[1]),
                    "lost": self.lost.tolist(),
                    "leaked": self.leaked.tolist(),
                    "beacon_flags": self.beacon_flags.tolist(),
                },
                sort_keys=True,
            )
        )
        return sidecar


class FrameSimulator:
    """Pauli frames for a batch of shots with per-qubit loss/leak status.

    Gates on leaked qubits act as the identity while their noise is kept.
    A two-qubit gate with a lost partner loses the other qubit as well.
    Measurements of lost or leaked qubits return random bits and raise
    the corresponding flag; a reset after such a measurement, a beacon
    loss check or an explicit leakage reset brings a fresh qubit in the
    maximally mixed state.
    """

    def __init__(self, num_qubits: int, shots: int, rng: np.random.Generator) -> None:
        self.num_qubits = num_qubits
        self.shots = shots
        self.rng = rng
        self.x = np.zeros((num_qubits, shots), dtype=np.bool_)
        self.z = np.zeros((num_qubits, shots), dtype=np.bool_)
        self.status = np.zeros((num_qubits, shots), dtype=np.uint8)
        self.lost = np.zeros(shots, dtype=np.int64)
        self.leaked = np.zeros(shots, dtype=np.int64)
        self.beacon_flags = np.zeros(shots, dtype=np.int64)
        self.records: list[npt.NDArray[np.bool_]] = []
        self.lost_flags: list[npt.NDArray[np.bool_]] = []
        self.leak_flags: list[npt.NDArray[np.bool_]] = []

    def _bits(self, shape: tuple[int, ...], p: float = 0.5) -> npt.NDArray[np.bool_]:
        if p <= 0.0:
            return np.zeros(shape, dtype=np.bool_)
        return self.rng.random(shape) < p

    def _lose(self, q: npt.NDArray[np.intp], mask: npt.NDArray[np.bool_]) -> None:
        """Mark ``q[i]`` lost in the shots where ``mask[i]`` is set."""
        fresh = mask & (self.status[q] != QubitStatus.LOST)
        self.lost += fresh.sum(axis=0)
        self.status[q] = np.where(fresh, np.uint8(QubitStatus.LOST), self.status[q])

    def _refresh(self, q: npt.NDArray[np.intp], mask: npt.NDArray[np.bool_]) -> None:
        self.status[q] = np.where(mask, np.uint8(QubitStatus.COMPUTATIONAL), self.status[q])
        self.x[q] ^= mask & self._bits(mask.shape)
        self.z[q] ^= mask & self._bits(mask.shape)

    def sample_loss_and_leak(self, duration: float, noise: NoiseParams) -> None:
        shape = (self.num_qubits, self.shots)
        if noise.p_loss > 0:
            all_q = np.arange(self.num_qubits)
            self._lose(all_q, self._bits(shape, min(1.0, noise.p_loss * duration)))
        if noise.p_leak > 0:
            leak = self._bits(shape, min(1.0, noise.p_leak * duration))
            leak &= self.status == QubitStatus.COMPUTATIONAL
            self.leaked += leak.sum(axis=0)
            self.status[leak] = QubitStatus.LEAKED

    def apply_error(self, ins: Instruction) -> None:
        p = ins.args[0] if ins.args else 0.0
        if p <= 0:
            return
        if ins.name == "DEPOLARIZE2":
            pairs = np.asarray(ins.targets, dtype=np.intp).reshape(-1, 2)
            shape = (pairs.shape[0], self.shots)
            fire = self._bits(shape, p)
            which = self.rng.integers(1, 16, size=shape)
            for col, shift in ((0, 0), (1, 2)):
                q = pairs[:, col]
                self.x[q] ^= fire & ((which >> shift) & 1).astype(np.bool_)
                self.z[q] ^= fire & ((which >> (shift + 1)) & 1).astype(np.bool_)
            return
        q = np.asarray(ins.targets, dtype=np.intp)
        shape = (q.shape[0], self.shots)
        fire = self._bits(shape, p)
        if ins.name == "X_ERROR":
            self.x[q] ^= fire
        elif ins.name == "Z_ERROR":
            self.z[q] ^= fire
        elif ins.name == "Y_ERROR":
            self.x[q] ^= fire
            self.z[q] ^= fire
        else:
            which = self.rng.integers(1, 4, size=shape)
            self.x[q] ^= fire & ((which & 1) == 1)
            self.z[q] ^= fire & ((which & 2) == 2)

    def _measure(self, ins: Instruction) -> None:
        q = np.asarray(ins.targets, dtype=np.intp)
        status = self.status[q]
        bad = status != QubitStatus.COMPUTATIONAL
        frame = self.z[q] if ins.name == "MX" else self.x[q]
        outcome = np.where(bad, self._bits(frame.shape), frame)
        self.records.append(outcome.T)
        self.lost_flags.append((status == QubitStatus.LOST).T)
        self.leak_flags.append((status == QubitStatus.LEAKED).T)
        gauge = self._bits(frame.shape)
        if ins.name == "MX":
            self.x[q] = gauge
        else:
            self.z[q] = gauge
        if ins.reset is not None:
            self.status[q] = QubitStatus.COMPUTATIONAL
            if ins.reset == "X":
                self.z[q] = False
                self.x[q] = self._bits(frame.shape)
            else:
                self.x[q] = False
                self.z[q] = self._bits(frame.shape)

    def apply(self, ins: Instruction, noise: NoiseParams) -> None:
        name = ins.name
        if name in ERROR_OPS:
            self.apply_error(ins)
            return
        if name in ("CX", "CZ"):
            pairs = np.asarray(ins.targets, dtype=np.intp).reshape(-1, 2)
            a, b = pairs[:, 0], pairs[:, 1]
            sa, sb = self.status[a], self.status[b]
            self._lose(b, sa == QubitStatus.LOST)
            self._lose(a, sb == QubitStatus.LOST)
            active = (self.status[a] == QubitStatus.COMPUTATIONAL) & (
                self.status[b] == QubitStatus.COMPUTATIONAL
            )
            if name == "CX":
                self.x[b] ^= active & self.x[a]
                self.z[a] ^= active & self.z[b]
            else:
                za = active & self.x[b]
                zb = active & self.x[a]
                self.z[a] ^= za
                self.z[b] ^= zb
        elif name in GATE1_OPS:
            q = np.asarray(ins.targets, dtype=np.intp)
            active = self.status[q] == QubitStatus.COMPUTATIONAL
            if name == "H":
                x, z = self.x[q].copy(), self.z[q].copy()
                self.x[q] = np.where(active, z, x)
                self.z[q] = np.where(active, x, z)
            else:
                self.z[q] ^= active & self.x[q]
        elif name == "RX":
            q = np.asarray(ins.targets, dtype=np.intp)
            self.z[q] = False
            self.x[q] = self._bits((q.shape[0], self.shots))
        elif name == "RZ":
            q = np.asarray(ins.targets, dtype=np.intp)
            self.x[q] = False
            self.z[q] = self._bits((q.shape[0], self.shots))
        elif name in ("MX", "MZ"):
            self._measure(ins)
        elif name == "LOSS_CHECK":
            q = np.asarray(ins.targets, dtype=np.intp)
            # the beacon itself may be lost during merge/split
            beacon = self._bits((q.shape[0], self.shots), min(1.0, noise.p_loss))
            self.lost += beacon.sum(axis=0)
            self._lose(q, beacon)
            found = self.status[q] == QubitStatus.LOST
            self.beacon_flags += found.sum(axis=0)
            self._refresh(q, found)
        elif name == "LEAK_RESET":
            q = np.asarray(ins.targets, dtype=np.intp)
            self._refresh(q, self.status[q] == QubitStatus.LEAKED)
        # SHIFT only carries noise

    def run(self, circuit: Circuit, noise: NoiseParams) -> SampleResult:
        trace = np.zeros((self.shots, len(circuit.moments)), dtype=np.int64)
        for idx, moment in enumerate(circuit.moments):
            self.sample_loss_and_leak(moment.duration, noise)
            before, after = noise_channels(moment, noise, circuit.num_qubits)
            for ins in before:
                self.apply_error(ins)
            for ins in moment.instructions:
                self.apply(ins, noise)
            for ins in after:
                self.apply_error(ins)
            trace[:, idx] = self.lost
        if self.records:
            record = np.concatenate(self.records, axis=1)
            lost_flags = np.concatenate(self.lost_flags, axis=1)
            leak_flags = np.concatenate(self.leak_flags, axis=1)
        else:
            record = np.zeros((self.shots, 0), dtype=np.bool_)
            lost_flags = leak_flags = record
        return SampleResult(
            detectors=_parities(record, circuit.detectors),
            observables=_parities(record, circuit.observables),
            lost=self.lost.copy(),
            leaked=self.leaked.copy(),
            lost_flags=lost_flags,
            leak_flags=leak_flags,
            beacon_flags=self.beacon_flags.copy(),
            loss_trace=trace,
        )


def _parities(
    record: npt.NDArray[np.bool_], groups: typing.Sequence[tuple[int, ...]]
) -> npt.NDArray[np.bool_]:
    out = np.zeros((record.shape[0], len(groups)), dtype=np.bool_)
    for i, group in enumerate(groups):
        if group:
            out[:, i] = np.bitwise_xor.reduce(record[:, list(group)], axis=1)
    return out


def _batch_rng(seed: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, batch])))


def sample(
    circuit: Circuit,
    noise: NoiseParams,
    shots: int,
    seed: int = 0,
    threads: typing.Optional[int] = None,
) -> SampleResult:
    """Monte Carlo detector and observable samples.

    Shots are cut into fixed batches, each with its own counter-based
    stream, so results do not depend on the number of threads.

    :raises CircuitError: if the circuit has neither detectors nor observables.
    """
    if not circuit.detectors and not circuit.observables:
        raise CircuitError("circuit is not annotated with detectors or observables")
    if shots < 0:
        raise ValueError("shots must be non-negative")
    threads = threads or Settings.from_env().threads
    sizes = [BATCH_SHOTS] * (shots // BATCH_SHOTS)
    if shots % BATCH_SHOTS or not sizes:
        sizes.append(shots % BATCH_SHOTS)

    def run(batch: int) -> SampleResult:
        sim = FrameSimulator(circuit.num_qubits, sizes[batch], _batch_rng(seed, batch))
        return sim.run(circuit, noise)

    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(run, range(len(sizes))))
    result = SampleResult.concatenate(parts)
    log.info(
        "sampled %d shots: %d detection events, logical error rate %.3g",
        shots,
        int(result.detectors.sum()),
        result.logical_error_rate(),
    )
    return result


# loss statistics


@dataclasses.dataclass(frozen=True)
class LossDistribution:
    """``pmf[j]`` is the probability of ``j`` lost qubits; ``tail`` covers more."""

    pmf: npt.NDArray[np.float64]
    tail: float = 0.0

    def __post_init__(self) -> None:
        total = float(self.pmf.sum()) + self.tail
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"loss distribution sums to {total}")

    def __getitem__(self, lost: int) -> float:
        return float(self.pmf[lost]) if lost < len(self.pmf) else 0.0

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.pmf)), self.pmf))

    @property
    def reload_probability(self) -> float:
        return 1.0 - float(self.pmf[0])


PUBLISHED_LOSS_TABLES: dict[str, dict[str, float]] = {
    "Q102": {
        "0": 0.999148, "1": 3.20e-5, "2": 3.20e-10, "3": 8.18e-4,
        "4": 2.09e-8, "5": 2.64e-13, "6": 2.00e-6, ">6": 1.03e-10,
    },
    "Q70": {
        "0": 0.999580, "1": 1.30e-5, "2": 1.15e-10, "3": 4.07e-4,
        "4": 6.14e-9, "5": 4.65e-14, "6": 8.19e-8, ">6": 1.23e-11,
    },
    "Q54": {
        "0": 0.999689, "1": 1.50e-5, "2": 6.10e-11, "3": 2.96e-4,
        "4": 3.31e-9, "5": 1.83e-14, "6": 4.50e-8, ">6": 5.00e-12,
    },
}  # fmt: skip


def published_loss_distribution(name: str, overflow: int = 7) -> LossDistribution:
    """Published per-SEC loss table of a memory block.

    The ``>6`` entry is placed at ``overflow`` lost qubits and the
    no-loss entry absorbs the rounding of the table.
    """
    try:
        table = PUBLISHED_LOSS_TABLES[name]
    except KeyError:
        raise CircuitError(f"no published loss table for {name!r}") from None
    if overflow < 7:
        raise ValueError("the overflow entry needs at least 7 lost qubits")
    pmf = np.zeros(overflow + 1)
    for key, prob in table.items():
        pmf[overflow if key.startswith(">") else int(key)] += prob
    pmf[0] = 1.0 - pmf[1:].sum()
    return LossDistribution(pmf)


def sec_exposure(sec: CompiledSec, n: int) -> float:
    """Qubit-POC exposed to loss in one SEC.

    Data and syndrome qubits are exposed for the whole cycle, beacons
    for the length of each loss check.
    """
    exposure = 0.0
    for moment in sec.circuit.moments:
        exposed = 2 * n
        if any(ins.name == "LOSS_CHECK" for ins in moment.instructions):
            exposed += n
        exposure += exposed * moment.duration
    return exposure


def compound_poisson_loss(
    exposure: float, sec_poc: float, p_loss: float, max_lost: int = 6, terms: int = 40
) -> LossDistribution:
    """Lost-qubit count ``Σ_{j≤X} Y_j`` for ``X ~ Poisson(p_loss·exposure)``.

    Each event costs one qubit with probability ``1/sec_poc`` (it struck
    the final measurement layer) and three otherwise.
    """
    if p_loss < 0 or exposure < 0:
        raise ValueError("exposure and p_loss must be non-negative")
    if sec_poc < 1:
        raise ValueError("an SEC lasts at least one POC")
    lam = p_loss * exposure
    pmf = np.zeros(max_lost + 1)
    tail = 0.0
    if lam == 0:
        pmf[0] = 1.0
        return LossDistribution(pmf)
    q3 = 1.0 - 1.0 / sec_poc
    for x in range(terms + 1):
        px = float(scipy.stats.poisson.pmf(x, lam))
        for j in range(x + 1):
            prob = px * float(scipy.stats.binom.pmf(j, x, q3))
            lost = x + 2 * j
            if lost <= max_lost:
                pmf[lost] += prob
            else:
                tail += prob
    # mass beyond the truncated Poisson series
    tail += float(scipy.stats.poisson.sf(terms, lam))
    pmf[0] = 1.0 - float(pmf[1:].sum()) - tail
    return LossDistribution(pmf, tail)


def sec_loss_distribution(
    sec: CompiledSec, n: int, p_loss: float, max_lost: int = 6
) -> LossDistribution:
    return compound_poisson_loss(sec_exposure(sec, n), sec.budget.total, p_loss, max_lost)


def compound_poisson_monte_carlo(
    lam: float, sec_poc: float, shots: int, seed: int = 0
) -> npt.NDArray[np.int64]:
    """Direct samples of the compound loss count."""
    rng = np.random.default_rng(seed)
    events = rng.poisson(lam, size=shots)
    triples = rng.binomial(events, 1.0 - 1.0 / sec_poc)
    return events + 2 * triples


def reload_overhead(n_blocks: int, q_reload: float, t_sec: float) -> float:
    """Relative SEC slowdown bound from local reloading.

    Every reload costs 3/20 POC; the synchronized SEC waits for the
    expected ``n_blocks · q_reload`` reloads in the worst case.
    """
    if n_blocks < 0 or not 0.0 <= q_reload <= 1.0 or t_sec <= 0:
        raise ValueError("invalid reload parameters")
    return 3 / TRANSPORT_STEPS_PER_POC * n_blocks * q_reload / t_sec


# logical error ansatz


@dataclasses.dataclass(frozen=True)
class AnsatzFit:
    """``p^⌈d/2⌉ exp(αp² + βp + ζ)``."""

    alpha: float
    beta: float
    zeta: float
    d_circ: int

    def __call__(self, p: typing.Union[float, npt.ArrayLike]) -> typing.Any:
        p = np.asarray(p, dtype=np.float64)
        return p ** math.ceil(self.d_circ / 2) * np.exp(
            self.alpha * p**2 + self.beta * p + self.zeta
        )

    def effective_factor(self, p: float, rate: float) -> float:
        """``f`` with ``self(f·p) = rate``."""
        return float(
            scipy.optimize.brentq(lambda f: math.log(self(f * p)) - math.log(rate), 1e-3, 1e3)
        )


PUBLISHED_ANSATZ: dict[tuple[str, str], AnsatzFit] = {
    ("Q102", "(0,0)"): AnsatzFit(6810, 656, 19.3, 9),
    ("Q102", "(p/1000,0)"): AnsatzFit(-4210, 501, 19.7, 9),
    ("Q102", "(p/1000,p/10)"): AnsatzFit(1.03e5, 481, 21.7, 9),
    ("Q70", "(0,0)"): AnsatzFit(1.07e6, -3410, 23.0, 9),
    ("Q70", "(p/1000,p/10)"): AnsatzFit(8.46e5, -1910, 23.2, 9),
    ("Q54", "(0,0)"): AnsatzFit(5.29e5, -1810, 23.7, 9),
    ("Q54", "(p/1000,p/10)"): AnsatzFit(-3.76e4, 235, 24.1, 9),
}


def fit_ansatz(
    points: typing.Iterable[tuple[float, float]], d_circ: int
) -> AnsatzFit:
    """Least-squares fit of ``log(rate) - ⌈d/2⌉ log p`` by a quadratic in ``p``.

    :raises ValueError: with fewer than three points or non-positive data.
    """
    data = np.asarray(list(points), dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 3:
        raise ValueError("fitting the ansatz needs at least three points")
    p, rate = data[:, 0], data[:, 1]
    if np.any(p <= 0) or np.any(rate <= 0):
        raise ValueError("physical and logical rates must be positive")
    target = np.log(rate) - math.ceil(d_circ / 2) * np.log(p)
    design = np.column_stack([p**2, p, np.ones_like(p)])
    # columns differ by orders of magnitude
    scale = np.abs(design).max(axis=0)
    coef, *_ = np.linalg.lstsq(design / scale, target, rcond=None)
    alpha, beta, zeta = coef / scale
    return AnsatzFit(float(alpha), float(beta), float(zeta), d_circ)
