"""Cat factories, stitching and Bell factories.

A weight-``w`` cat state is grown on two rows of ``w/2`` qubits that sit
on a ring: the top row is traversed left to right, the bottom row right
to left, and a clockwise shift moves every qubit along this ring. CX
layers copy the cat from the top row into the row below, doubling it.
Verification measures every ring-neighbour ``ZZ`` with one ancilla row
above and one below the cat, and a final leakage detection unit moves the
cat onto the ancillas.

The heuristic model gives error, rejection and loss rates of a factory
as a function of the cat weight and the number of verification rounds.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import typing

import numpy as np
import numpy.typing as npt

from walkingcat import CircuitError
from walkingcat.schedule import TRANSPORT_STEPS_PER_POC, Circuit, DetectorInfo, Instruction
from walkingcat.simkit import LossDistribution, NoiseParams, sample

log = logging.getLogger("walkingcat.catbell")

BELL_FACTORY_QUBITS = 12
BELL_PAIR_POC = 2
STITCH_POC = 1
STITCH_NOISE_FACTOR = 4
"""Pessimistic error rate of one stitching parity check, in units of ``p``."""


def _ceil_log2(w: int) -> int:
    return (w - 1).bit_length()


def required_rounds(eps: float, p: float) -> int:
    """Verification rounds ``⌈log ε / (2 log 2p)⌉`` for an (ε, p)-independent cat.

    :raises ValueError: unless ``0 < ε < 1`` and ``0 < p < 1/2``.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"target precision must lie in (0, 1), got {eps}")
    if not 0.0 < p < 0.5:
        raise ValueError(f"physical error rate must lie in (0, 1/2), got {p}")
    return max(0, math.ceil(math.log(eps) / (2 * math.log(2 * p))))


@dataclasses.dataclass(frozen=True)
class CatSpec:
    """A cat factory: weight, verification rounds and noise levels.

    ``m`` defaults to :func:`required_rounds` for ``eps`` and ``p``.
    """

    w: int
    m: typing.Optional[int] = None
    eps: float = 1e-10
    p: float = 1e-4
    p_leak: float = 1e-5
    p_loss: float = 1e-7

    def __post_init__(self) -> None:
        if self.w < 2 or self.w % 2:
            raise ValueError(f"cat weight must be even and positive, got {self.w}")
        for name in ("p_leak", "p_loss"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.m is None:
            object.__setattr__(self, "m", required_rounds(self.eps, self.p))
        elif self.m < 0:
            raise ValueError(f"verification rounds must be non-negative, got {self.m}")

    @property
    def rounds(self) -> int:
        assert self.m is not None
        return self.m


@dataclasses.dataclass(frozen=True)
class CatModel:
    """Heuristic performance of one cat factory.

    Rates are capped at 1. ``loss`` is the per-attempt distribution of
    lost qubits.
    """

    w: int
    m: int
    x_rate: float
    """X error rate per cat qubit."""
    z_rate: float
    """Z error rate per cat qubit."""
    reject_error: float
    reject_leak: float
    reject_loss: float
    flow: int
    """Qubits through the factory per SEC."""
    prod_pocs: int
    prod_transport: int
    loss: LossDistribution = dataclasses.field(repr=False)

    @property
    def reject_total(self) -> float:
        return min(1.0, self.reject_error + self.reject_leak + self.reject_loss)

    @property
    def acceptance(self) -> float:
        return 1.0 - self.reject_total

    def loss_peaks(self) -> dict[int, float]:
        return {int(k): float(v) for k, v in enumerate(self.loss.pmf) if k and v > 0}

    def as_dict(self) -> dict[str, typing.Any]:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "loss"}
        out["reject_total"] = self.reject_total
        out["loss_peaks"] = self.loss_peaks()
        out["expected_loss"] = self.loss.mean
        return out


def cat_loss_distribution(w: int, m: int, p_loss: float) -> LossDistribution:
    """Four-peak loss model of a cat factory attempt.

    One qubit is lost with probability ``2w·p_loss``, a verification
    round worth ``4m`` with ``8wm·p_loss``; ``8m`` and the whole register
    ``2w`` share ``p_loss(⌈log₂ w⌉+1)``. The model is pessimistic.
    """
    spread = p_loss * (_ceil_log2(w) + 1) / 2
    peaks = ((1, 2 * w * p_loss), (4 * m, 8 * w * m * p_loss), (8 * m, spread), (2 * w, spread))
    pmf = np.zeros(2 * w + 1)
    for lost, prob in peaks:
        if lost > 0:
            pmf[min(lost, 2 * w)] += prob
    if pmf.sum() > 1.0:
        raise ValueError("loss rate too large for the cat loss model")
    pmf[0] = 1.0 - pmf[1:].sum()
    return LossDistribution(pmf)


def cat_model(spec: CatSpec) -> CatModel:
    w, m, p = spec.w, spec.rounds, spec.p
    depth = _ceil_log2(w) + w / 40 + 4
    model = CatModel(
        w=w,
        m=m,
        x_rate=p / 2,
        z_rate=min(1.0, 4 * (m + 1) * p / 15),
        reject_error=min(1.0, (2 * m + 1) * w * p),
        reject_leak=min(1.0, spec.p_leak * w * (depth + 6 * m)),
        reject_loss=min(1.0, spec.p_loss * w * (depth + 8 * m)),
        flow=w,
        prod_pocs=_ceil_log2(w) + 3 * m + 3,
        prod_transport=w // 2 + m - 1,
        loss=cat_loss_distribution(w, m, spec.p_loss),
    )
    log.debug("cat model w=%d m=%d: reject %.3g", w, m, model.reject_total)
    return model


# circuits


class CatRing:
    """Occupancy of the ``w`` slots of a two-row cat register.

    Slots ``0..w/2-1`` form the top row and ``w/2..w-1`` the bottom row,
    both numbered left to right, so slot ``s`` sits above ``s + w/2``.
    """

    def __init__(self, w: int, offset: int = 0) -> None:
        if w < 2 or w % 2:
            raise ValueError(f"cat weight must be even and positive, got {w}")
        self.w = w
        half = w // 2
        self.ring = list(range(half)) + list(range(w - 1, half - 1, -1))
        self.occupant = [offset + s for s in range(w)]

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(self.occupant)

    def shift(self, steps: int) -> None:
        """Move every qubit ``steps`` places clockwise."""
        old = list(self.occupant)
        w = self.w
        for r, slot in enumerate(self.ring):
            self.occupant[slot] = old[self.ring[(r - steps) % w]]

    def below(self, slot: int) -> int:
        return self.occupant[slot + self.w // 2]

    def __getitem__(self, slot: int) -> int:
        return self.occupant[slot]


def _shift(circuit: Circuit, ring: CatRing, steps: int, label: str) -> None:
    if steps <= 0:
        return
    ring.shift(steps)
    circuit.append(
        [Instruction("SHIFT", ring.qubits, (float(steps),))],
        duration=steps / TRANSPORT_STEPS_PER_POC,
        kind="transport",
        label=label,
    )


def _copy_layer(circuit: Circuit, ring: CatRing, slots: typing.Iterable[int]) -> None:
    pairs = [v for s in slots for v in (ring[s], ring.below(s))]
    circuit.append([Instruction("CX", tuple(pairs))], label="prep")


def _prep_init(ring: CatRing) -> list[Instruction]:
    return [Instruction("RX", (ring[0],)), Instruction("RZ", ring.qubits[1:])]


def _emit_prep(circuit: Circuit, ring: CatRing) -> None:
    """Grow the cat from slot 0 by doubling, one CX layer per POC."""
    w = ring.w
    half = w // 2
    c = w.bit_length() - 2
    for i in range(c + 1):
        _copy_layer(circuit, ring, range(2**i))
        if i < c:
            _shift(circuit, ring, 2**i, "prep")
    if 2 ** (c + 1) < w:
        _shift(circuit, ring, half - 2**c, "prep")
        _copy_layer(circuit, ring, range(2 ** (c + 1) - half, half))


def cat_prep_circuit(w: int) -> Circuit:
    """Noiseless-ready preparation of a weight-``w`` cat on qubits ``0..w-1``.

    :raises ValueError: for odd or non-positive ``w``.
    """
    ring = CatRing(w)
    circuit = Circuit(w)
    circuit.append(_prep_init(ring), label="init")
    _emit_prep(circuit, ring)
    return circuit


@dataclasses.dataclass
class CatFactoryCircuit:
    """A complete factory attempt on ``2w`` qubits.

    Cat qubits start on ``0..w-1``; the ancilla above or below slot ``s``
    is ``w + s``. After the leakage detection unit the cat lives on
    ``outputs`` and its X-parity frame is the parity of ``tail``.
    """

    w: int
    m: int
    circuit: Circuit
    checks: list[int]
    """Measurement indices of the ancilla ZZ checks, round by round."""
    tail: list[int]
    """Measurement indices of the cat qubits in the final X readout."""
    outputs: tuple[int, ...]

    @property
    def factory_measurements(self) -> list[int]:
        return self.checks + self.tail

    def verification_depth(self) -> float:
        return sum(
            mo.duration
            for mo in self.circuit.moments
            if mo.kind == "compute" and mo.label in ("verify", "ldu")
        )

    def verification_transport(self) -> int:
        return sum(
            int(ins.args[0])
            for mo in self.circuit.moments
            if mo.label == "verify"
            for ins in mo.instructions
            if ins.name == "SHIFT"
        )

    def transport_steps(self) -> int:
        return sum(
            int(ins.args[0]) for _, ins in self.circuit.instructions() if ins.name == "SHIFT"
        )


def cat_factory(w: int, m: int) -> CatFactoryCircuit:
    """Preparation, ``m`` verification rounds and the leakage detection unit.

    Every ancilla measurement is a detector; a verified cat has all of
    them silent and no lost or leaked readout.
    """
    if m < 0:
        raise ValueError(f"verification rounds must be non-negative, got {m}")
    ring = CatRing(w)
    ancillas = tuple(range(w, 2 * w))
    circuit = Circuit(2 * w)
    circuit.append(
        [*_prep_init(ring), Instruction("RX" if m else "RZ", ancillas)], label="init"
    )
    _emit_prep(circuit, ring)

    checks: list[int] = []
    for k in range(m):
        circuit.append([_ancilla_cz(ring, w)], label="verify")
        _shift(circuit, ring, 1, "verify")
        circuit.append([_ancilla_cz(ring, w)], label="verify")
        records = circuit.append(
            [Instruction("MX", ancillas, reset="X" if k < m - 1 else "Z")], label="verify"
        )
        for s, rec in enumerate(records):
            circuit.detectors.append((rec,))
            circuit.detector_info.append(DetectorInfo(k, "Z", s))
        checks.extend(records)

    pairs = tuple(v for s in range(w) for v in (ring[s], w + s))
    circuit.append([Instruction("CX", pairs)], label="ldu")
    tail = circuit.append([Instruction("MX", ring.qubits)], label="ldu")
    return CatFactoryCircuit(w, m, circuit, checks, tail, ancillas)


def _ancilla_cz(ring: CatRing, w: int) -> Instruction:
    return Instruction("CZ", tuple(v for s in range(w) for v in (w + s, ring[s])))


def cat_verify_circuit(w: int, m: int) -> Circuit:
    return cat_factory(w, m).circuit


# stitching and Bell pairs


@dataclasses.dataclass
class StitchCircuit:
    circuit: Circuit
    first: tuple[int, ...]
    second: tuple[int, ...]
    parity: list[int]
    """Measurement indices whose parity is the joint ``ZZ`` outcome."""


def stitch_circuit(w1: int, w2: int, m: int) -> StitchCircuit:
    """Merge two freshly prepared cats with ``m`` Bell-pair parity checks.

    Bell pair ``l`` couples the ``l``-th qubit of each cat. Detector
    ``l`` compares the parity of pair ``l`` with pair 0; the observable is
    the parity of pair 0, an X frame on the first cat when odd.

    :raises CircuitError: if ``m`` exceeds either cat weight.
    """
    if not 1 <= m <= min(w1, w2):
        raise CircuitError(f"cannot stitch cats of weight {w1} and {w2} with {m} checks")
    a = CatRing(w1)
    b = CatRing(w2, offset=w1)
    bell = [(w1 + w2 + 2 * ell, w1 + w2 + 2 * ell + 1) for ell in range(m)]
    circuit = Circuit(w1 + w2 + 2 * m)
    circuit.append(
        [
            *_prep_init(a),
            *_prep_init(b),
            Instruction("RX", tuple(x for x, _ in bell)),
            Instruction("RZ", tuple(y for _, y in bell)),
        ],
        label="init",
    )
    _emit_prep(circuit, a)
    _emit_prep(circuit, b)
    circuit.append([Instruction("CX", tuple(v for pair in bell for v in pair))], label="bell")
    cz = tuple(
        v for ell, (x, y) in enumerate(bell) for v in (a.qubits[ell], x, b.qubits[ell], y)
    )
    circuit.append([Instruction("CZ", cz)], label="stitch")
    records = circuit.append(
        [Instruction("MX", tuple(v for pair in bell for v in pair))], label="stitch"
    )
    pairs = [(records[2 * ell], records[2 * ell + 1]) for ell in range(m)]
    for ell in range(1, m):
        circuit.detectors.append(tuple(sorted(pairs[0] + pairs[ell])))
        circuit.detector_info.append(DetectorInfo(0, "Z", ell))
    circuit.observables.append(pairs[0])
    return StitchCircuit(circuit, a.qubits, b.qubits, list(pairs[0]))


@dataclasses.dataclass(frozen=True)
class StitchModel:
    m: int
    """Bell pairs, and parity checks, per stitch."""
    reject: float
    p_check: float
    """Error rate of one parity check."""
    poc: int = STITCH_POC
    depth: int = 2


def stitch_rounds(eps: float, p: float, margin: int = 1) -> int:
    """Smallest ``m`` with ``(4p)^m < ε``, plus ``margin`` extra checks."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"target precision must lie in (0, 1), got {eps}")
    p_check = STITCH_NOISE_FACTOR * p
    if not 0.0 < p_check < 1.0:
        raise ValueError(f"parity check error rate {p_check} outside (0, 1)")
    m = math.floor(math.log(eps) / math.log(p_check)) + 1
    return m + margin


def stitch_model(eps: float = 1e-10, p: float = 1e-4, margin: int = 1) -> StitchModel:
    m = stitch_rounds(eps, p, margin)
    p_check = STITCH_NOISE_FACTOR * p
    return StitchModel(m=m, reject=min(1.0, m * p_check), p_check=p_check)


@dataclasses.dataclass(frozen=True)
class BellSizing:
    factories: int
    flow: int
    """Qubits per factory per cat production round."""
    qubits: int
    pairs_per_round: int


def bell_sizing(n: int, m: int = 2) -> BellSizing:
    """Bell factories serving ``n`` cat factories.

    At most ``n/2`` stitches of ``m`` Bell pairs happen per cat round and
    a factory makes ``⌈3m/2⌉`` pairs in that time, so ``⌈n/3⌉``
    factories suffice at ``m = 2``.
    """
    if n < 0 or m < 1:
        raise ValueError("need n ≥ 0 cat factories and m ≥ 1")
    per_factory = math.ceil(3 * m / 2)
    factories = math.ceil(n * m / (2 * per_factory)) if n else 0
    return BellSizing(
        factories=factories,
        flow=2 * per_factory,
        qubits=factories * BELL_FACTORY_QUBITS,
        pairs_per_round=per_factory,
    )


def bell_model(m: int = 2) -> BellSizing:
    return bell_sizing(1, m)


def bell_loss_distribution(p_fail: float = 3.6e-6) -> LossDistribution:
    """A Bell factory either loses its pair or nothing."""
    return LossDistribution(np.array([1.0 - p_fail, 0.0, p_fail]))


# Monte Carlo


@dataclasses.dataclass
class CatSimResult:
    w: int
    m: int
    shots: int
    accepted: int
    rejected_detection: int
    rejected_loss: int
    rejected_leak: int
    x_weights: npt.NDArray[np.int64]
    """Accepted shots by residual X weight, reduced modulo ``X^⊗w``."""
    z_errors: int
    """Accepted shots with a flipped X parity."""
    z_shots: int

    @property
    def acceptance(self) -> float:
        return self.accepted / self.shots if self.shots else 0.0

    @property
    def rejection(self) -> float:
        return 1.0 - self.acceptance

    def x_rate(self, k: int) -> float:
        return float(self.x_weights[k]) / self.accepted if self.accepted else 0.0

    @property
    def z_rate(self) -> float:
        return self.z_errors / self.z_shots if self.z_shots else 0.0

    def rows(self) -> list[dict[str, typing.Any]]:
        return [
            {"weight": k, "count": int(c), "rate": self.x_rate(k)}
            for k, c in enumerate(self.x_weights)
        ]


def _rejections(
    factory: CatFactoryCircuit, detectors: npt.NDArray[np.bool_], lost: npt.NDArray[np.bool_],
    leaked: npt.NDArray[np.bool_],
) -> tuple[npt.NDArray[np.bool_], npt.NDArray[np.bool_], npt.NDArray[np.bool_]]:
    own = factory.factory_measurements
    return detectors.any(axis=1), lost[:, own].any(axis=1), leaked[:, own].any(axis=1)


def cat_sim(
    w: int,
    m: int,
    noise: NoiseParams,
    shots: int,
    seed: int = 0,
    threads: typing.Optional[int] = None,
) -> CatSimResult:
    """Sample factory attempts and characterise the accepted cats.

    One batch reads the outputs in Z to histogram residual X errors;
    a second batch reads them in X and compares with the frame from the
    leakage detection unit to count phase flips.
    """
    factory = cat_factory(w, m)
    readout = factory.circuit.append([Instruction("MZ", factory.outputs)], label="readout")
    factory.circuit.observables.extend((rec,) for rec in readout)
    res = sample(factory.circuit, noise, shots, seed, threads)
    det, lost, leak = _rejections(factory, res.detectors, res.lost_flags, res.leak_flags)
    accepted = ~(det | lost | leak)
    flips = res.observables.sum(axis=1)
    weight = np.minimum(flips, w - flips)
    hist = np.bincount(weight[accepted], minlength=w // 2 + 1).astype(np.int64)

    phase = cat_factory(w, m)
    readout = phase.circuit.append([Instruction("MX", phase.outputs)], label="readout")
    phase.circuit.observables.append(tuple(readout) + tuple(phase.tail))
    res_z = sample(phase.circuit, noise, shots, seed + 1, threads)
    det_z, lost_z, leak_z = _rejections(phase, res_z.detectors, res_z.lost_flags, res_z.leak_flags)
    keep = ~(det_z | lost_z | leak_z)

    result = CatSimResult(
        w=w,
        m=m,
        shots=shots,
        accepted=int(accepted.sum()),
        rejected_detection=int(det.sum()),
        rejected_loss=int((lost & ~det).sum()),
        rejected_leak=int((leak & ~det & ~lost).sum()),
        x_weights=hist,
        z_errors=int(res_z.observables[keep, 0].sum()),
        z_shots=int(keep.sum()),
    )
    log.info(
        "cat w=%d m=%d: acceptance %.4g over %d shots", w, m, result.acceptance, shots
    )
    return result


def fit_weight_slope(
    ps: typing.Sequence[float], rates: typing.Sequence[float]
) -> float:
    """Slope of ``log rate`` against ``log p``; zero rates are skipped."""
    pts = [(math.log(p), math.log(r)) for p, r in zip(ps, rates) if r > 0]
    if len(pts) < 2:
        raise ValueError("need at least two non-zero rates to fit a slope")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])
