"""Timed circuits and the syndrome extraction compiler.

A :class:`Circuit` is a list of :class:`Moment` layers. A compute moment
lasts one physical operation cycle (POC); a transport moment lasts one
twentieth of a POC per unit transport step. Qubit roles are fixed in
software, so cyclic shifts only contribute time and noise.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
import math
import re
import typing

import numpy as np

from walkingcat import CircuitError, ScheduleError
from walkingcat.codes import ThreeRingCode
from walkingcat.gf2 import Monomial

log = logging.getLogger("walkingcat.schedule")

TRANSPORT_STEPS_PER_POC = 20

GATE_OPS = frozenset({"CX", "CZ"})
GATE1_OPS = frozenset({"H", "S"})
PREP_OPS = frozenset({"RX", "RZ"})
MEASURE_OPS = frozenset({"MX", "MZ"})
ERROR_OPS = frozenset(
    {"X_ERROR", "Y_ERROR", "Z_ERROR", "DEPOLARIZE1", "DEPOLARIZE2"}
)
OPS = (
    GATE_OPS
    | GATE1_OPS
    | PREP_OPS
    | MEASURE_OPS
    | ERROR_OPS
    | {"SHIFT", "LOSS_CHECK", "LEAK_RESET"}
)


# circuit model


@dataclasses.dataclass(frozen=True)
class Instruction:
    """One operation applied in parallel to ``targets``.

    Two-qubit gates list their targets as consecutive control/target
    pairs. ``reset`` names the basis a measured qubit is reset to.
    """

    name: str
    targets: tuple[int, ...]
    args: tuple[float, ...] = ()
    reset: typing.Optional[str] = None

    def __post_init__(self) -> None:
        if self.name not in OPS:
            raise CircuitError(f"unknown operation {self.name!r}")
        if self.name in GATE_OPS | {"DEPOLARIZE2"} and len(self.targets) % 2:
            raise CircuitError(f"{self.name} needs an even number of targets")
        if self.reset not in (None, "X", "Z"):
            raise CircuitError(f"invalid reset basis {self.reset!r}")

    def pairs(self) -> list[tuple[int, int]]:
        t = self.targets
        return [(t[i], t[i + 1]) for i in range(0, len(t), 2)]

    def format(self) -> str:
        op = self.name if self.reset is None else f"{self.name}+R{self.reset}"
        qubits = " ".join(str(q) for q in self.targets)
        params = " ".join(f"{a:g}" for a in self.args)
        return f"{op} | {qubits} | {params}"


@dataclasses.dataclass(frozen=True)
class Moment:
    instructions: tuple[Instruction, ...]
    duration: float = 1.0
    """Length in POC."""
    kind: str = "compute"
    label: str = "gate"

    def qubits(self) -> set[int]:
        out: set[int] = set()
        for ins in self.instructions:
            out.update(ins.targets)
        return out


@dataclasses.dataclass(frozen=True)
class DetectorInfo:
    round: int
    basis: str
    check: int


@dataclasses.dataclass
class Circuit:
    """A timed circuit with optional detector and observable annotations.

    Detectors and observables are parities of measurement records,
    addressed by their absolute index in execution order.
    """

    num_qubits: int
    moments: list[Moment] = dataclasses.field(default_factory=list)
    detectors: list[tuple[int, ...]] = dataclasses.field(default_factory=list)
    detector_info: list[DetectorInfo] = dataclasses.field(default_factory=list)
    observables: list[tuple[int, ...]] = dataclasses.field(default_factory=list)

    def append(
        self,
        instructions: typing.Sequence[Instruction],
        duration: float = 1.0,
        kind: str = "compute",
        label: str = "gate",
    ) -> list[int]:
        """Add a moment and return the measurement indices it creates."""
        start = self.num_measurements
        moment = Moment(tuple(instructions), duration, kind, label)
        self._check_moment(moment)
        self.moments.append(moment)
        return list(range(start, self.num_measurements))

    def _check_moment(self, moment: Moment) -> None:
        seen: set[int] = set()
        for ins in moment.instructions:
            for q in ins.targets:
                if not 0 <= q < self.num_qubits:
                    raise CircuitError(f"qubit {q} outside 0..{self.num_qubits - 1}")
            if ins.name in ERROR_OPS:
                continue
            overlap = seen.intersection(ins.targets)
            if overlap or len(set(ins.targets)) != len(ins.targets):
                raise CircuitError(f"qubits {sorted(overlap)} used twice in one moment")
            seen.update(ins.targets)
        names = {ins.name for ins in moment.instructions}
        if moment.kind == "transport" and names - {"SHIFT"}:
            raise CircuitError("transport moments may only contain SHIFT")
        if moment.kind == "compute" and "SHIFT" in names:
            raise CircuitError("SHIFT must live in a transport moment")

    @property
    def num_measurements(self) -> int:
        return sum(
            len(ins.targets)
            for m in self.moments
            for ins in m.instructions
            if ins.name in MEASURE_OPS
        )

    @property
    def duration(self) -> float:
        return sum(m.duration for m in self.moments)

    def instructions(self) -> typing.Iterator[tuple[int, Instruction]]:
        for idx, m in enumerate(self.moments):
            for ins in m.instructions:
                yield idx, ins

    def extend(self, other: Circuit) -> None:
        """Append the moments of ``other`` and offset its annotations."""
        if other.num_qubits > self.num_qubits:
            raise CircuitError("cannot extend with a wider circuit")
        offset = self.num_measurements
        self.moments.extend(other.moments)
        self.detectors.extend(tuple(i + offset for i in d) for d in other.detectors)
        self.detector_info.extend(other.detector_info)
        self.observables.extend(tuple(i + offset for i in o) for o in other.observables)

    def without_noise(self) -> Circuit:
        moments = [
            Moment(
                tuple(i for i in m.instructions if i.name not in ERROR_OPS),
                m.duration,
                m.kind,
                m.label,
            )
            for m in self.moments
        ]
        return dataclasses.replace(self, moments=moments)

    def to_text(self) -> str:
        """One operation per line: ``POC-index | op | qubits | params``."""
        lines: list[str] = []
        clock = 0.0
        for m in self.moments:
            for ins in m.instructions:
                lines.append(f"{clock:.2f} | {ins.format()}")
            clock += m.duration
        for i, det in enumerate(self.detectors):
            lines.append(f"{clock:.2f} | DETECTOR | {' '.join(map(str, det))} | {i}")
        for i, obs in enumerate(self.observables):
            lines.append(f"{clock:.2f} | OBSERVABLE | {' '.join(map(str, obs))} | {i}")
        return "\n".join(lines) + "\n"


# schedules


@dataclasses.dataclass(frozen=True, order=True)
class Term:
    """``A_i`` or ``B_i`` with a 1-based index."""

    family: str
    index: int

    def monomial(self, code: ThreeRingCode) -> Monomial:
        poly = code.a if self.family == "A" else code.b
        if not 1 <= self.index <= len(poly):
            raise ScheduleError(f"{self} has no term in a polynomial of size {len(poly)}")
        return poly[self.index - 1]

    def __str__(self) -> str:
        return f"{self.family}{self.index}"


@dataclasses.dataclass(frozen=True)
class Schedule:
    """Pairs ``(T_X, T_Z)``; the Z entry is implicitly transposed."""

    pairs: tuple[tuple[Term, Term], ...]

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> typing.Iterator[tuple[Term, Term]]:
        return iter(self.pairs)

    @property
    def x_terms(self) -> list[Term]:
        return [p[0] for p in self.pairs]

    @property
    def z_terms(self) -> list[Term]:
        return [p[1] for p in self.pairs]

    def format(self) -> str:
        return ",".join(f"({x},{z}T)" for x, z in self.pairs)

    def __str__(self) -> str:
        return self.format()


_PAIR = re.compile(r"\(\s*([AB])(\d+)\s*,\s*([AB])(\d+)\s*(?:T|ᵀ|\^T)?\s*\)")


def parse_schedule(text: str) -> Schedule:
    """Parse ``"(B1,B4T),(A1,A2T),…"``; ``ᵀ`` and ``^T`` are accepted too.

    :raises ScheduleError: if no pair can be read or text is left over.
    """
    body = text.strip()
    if body.startswith("((") and body.endswith("))"):
        body = body[1:-1]
    pairs: list[tuple[Term, Term]] = []
    pos = 0
    for match in _PAIR.finditer(body):
        gap = body[pos : match.start()].strip().strip(",").strip()
        if gap:
            raise ScheduleError(f"unexpected text {gap!r} in schedule")
        pairs.append(
            (
                Term(match.group(1), int(match.group(2))),
                Term(match.group(3), int(match.group(4))),
            )
        )
        pos = match.end()
    if body[pos:].strip().strip(","):
        raise ScheduleError(f"unexpected text {body[pos:].strip()!r} in schedule")
    if not pairs:
        raise ScheduleError(f"no schedule pairs in {text!r}")
    return Schedule(tuple(pairs))


PUBLISHED_SCHEDULES: dict[str, str] = {
    "Q102": "(B1,B4T),(A1,A2T),(A3,A4T),(B2,B3T),(B3,B2T),(A4,A3T),(A2,A1T),(B4,B1T)",
    "Q70": "(B1,B3T),(A1,A3T),(A4,A2T),(B2,B2T),(A3,A1T),(A2,A4T),(B3,B1T)",
    "Q54": "(B2,B1T),(A1,A4T),(B4,B3T),(A3,A2T),(A2,A3T),(B3,B4T),(A4,A1T),(B1,B2T)",
}

PUBLISHED_BUDGETS: dict[str, float] = {"Q54": 28.15, "Q70": 27.70, "Q102": 33.70}
"""Beacon and LDU augmented SEC lengths in POC."""


def published_schedule(name: str) -> Schedule:
    try:
        return parse_schedule(PUBLISHED_SCHEDULES[name])
    except KeyError as exc:
        raise ScheduleError(f"no published schedule for {name!r}") from exc


def check_schedule(code: ThreeRingCode, schedule: Schedule) -> None:
    """Raise :class:`ScheduleError` describing the first structural defect."""
    if code.rings[0] != 2:
        raise ScheduleError("schedules are defined for a = 2 only")
    w = code.check_weight
    if len(schedule) != w:
        raise ScheduleError(f"schedule has {len(schedule)} pairs, check weight is {w}")
    expected = {Term("A", i + 1) for i in range(len(code.a))} | {
        Term("B", i + 1) for i in range(len(code.b))
    }
    for tau, (tx, tz) in enumerate(schedule):
        if tx.family != tz.family:
            raise ScheduleError(f"pair {tau + 1} ({tx},{tz}T) mixes A and B terms")
    for label, terms in (("X", schedule.x_terms), ("Z", schedule.z_terms)):
        if len(set(terms)) != len(terms) or set(terms) != expected:
            raise ScheduleError(f"{label} entries do not cover A and B exactly once")


def validate_schedule(code: ThreeRingCode, schedule: Schedule) -> bool:
    try:
        check_schedule(code, schedule)
    except ScheduleError as exc:
        log.debug("invalid schedule %s: %s", schedule, exc)
        return False
    return True


def schedule_is_deterministic(code: ThreeRingCode, schedule: Schedule) -> bool:
    """True when every X check commutes with every Z check mid-circuit.

    An X check and a Z check at offset ``δ`` share one left and one right
    qubit for each ``(A_i, B_j)`` with ``a_i + b_j = δ``. The syndrome is
    deterministic iff the number of shared qubits on which the CX comes
    before the CZ is even for every ``δ``.
    """
    check_schedule(code, schedule)
    tx = {t: tau for tau, t in enumerate(schedule.x_terms)}
    tz = {t: tau for tau, t in enumerate(schedule.z_terms)}
    counts: dict[tuple[int, int], int] = {}
    for i, a in enumerate(code.a):
        for j, b in enumerate(code.b):
            ta, tb = Term("A", i + 1), Term("B", j + 1)
            delta = a.times(b, code.ell, code.m)
            key = (delta.i, delta.j)
            before = int(tx[ta] < tz[tb]) + int(tx[tb] < tz[ta])
            counts[key] = counts.get(key, 0) + before
    return all(c % 2 == 0 for c in counts.values())


def mirror_schedule(code: ThreeRingCode, x_order: typing.Sequence[Term]) -> Schedule:
    """Schedule whose Z entry at layer τ is the X entry at layer ``w-1-τ``.

    :raises ScheduleError: if the family sequence is not a palindrome.
    """
    order = list(x_order)
    families = [t.family for t in order]
    if families != families[::-1]:
        raise ScheduleError("mirror schedules need a palindromic A/B sequence")
    schedule = Schedule(tuple(zip(order, order[::-1])))
    check_schedule(code, schedule)
    return schedule


def find_deterministic_schedule(
    code: ThreeRingCode, limit: int = 10_000
) -> typing.Optional[Schedule]:
    """First mirror schedule with deterministic syndromes.

    At most ``limit`` X orders are inspected.
    """
    terms = [Term("A", i + 1) for i in range(len(code.a))] + [
        Term("B", i + 1) for i in range(len(code.b))
    ]
    for perm in itertools.islice(itertools.permutations(terms), limit):
        fams = [t.family for t in perm]
        if fams != fams[::-1]:
            continue
        schedule = mirror_schedule(code, perm)
        if schedule_is_deterministic(code, schedule):
            return schedule
    return None


# transport


def _ring_steps(s: int, t: int, ell: int, m: int) -> int:
    """Unit steps for a medium shift ``s`` and a short shift ``t``.

    Medium rings go the shorter way round. Short rings turn one way only,
    so ``t`` is the displacement in their direction of travel.
    """
    s %= ell
    return min(s, ell - s) * m + t % m


def shift_between(
    code: ThreeRingCode, prev: tuple[Term, Term], cur: tuple[Term, Term]
) -> tuple[int, int, int, int, int, int]:
    """``(steps, r, s_X, t_X, s_Z, t_Z)`` to move from one pair to the next.

    The long ring costs ``ℓm`` unit steps. The short rings of the Z block
    turn opposite to those of the X block, so a Z displacement ``t_Z``
    costs ``m - t_Z``. X and Z blocks move in parallel, so the larger of
    the two counts.
    """
    r = int(prev[0].family != cur[0].family)
    px, cx = prev[0].monomial(code), cur[0].monomial(code)
    pz, cz = prev[1].monomial(code), cur[1].monomial(code)
    sx, txs = (cx.i - px.i) % code.ell, (cx.j - px.j) % code.m
    sz, tzs = (pz.i - cz.i) % code.ell, (pz.j - cz.j) % code.m
    steps = r * code.group_size + max(
        _ring_steps(sx, txs, code.ell, code.m), _ring_steps(sz, -tzs, code.ell, code.m)
    )
    return steps, r, sx, txs, sz, tzs


@dataclasses.dataclass(frozen=True)
class TransportCost:
    steps: int
    poc: float


def transport_cost(circuit: Circuit) -> TransportCost:
    steps = 0
    for _, ins in circuit.instructions():
        if ins.name == "SHIFT":
            steps += int(ins.args[0])
    return TransportCost(steps, steps / TRANSPORT_STEPS_PER_POC)


# SEC compilation


@dataclasses.dataclass(frozen=True)
class SecBudget:
    """Length of one SEC in POC, by category."""

    ancilla_reset: float
    gate_layers: float
    cyclic_shift: float
    loss_leak_checks: float
    measurement: float

    @property
    def total(self) -> float:
        return round(
            self.ancilla_reset
            + self.gate_layers
            + self.cyclic_shift
            + self.loss_leak_checks
            + self.measurement,
            10,
        )

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (
            self.ancilla_reset,
            self.gate_layers,
            self.cyclic_shift,
            self.loss_leak_checks,
            self.measurement,
        )


AUGMENTS = ("none", "beacon", "beacon+LDU")


def budget_of(circuit: Circuit) -> SecBudget:
    by_label: dict[str, float] = {}
    for m in circuit.moments:
        by_label[m.label] = by_label.get(m.label, 0.0) + m.duration
    return SecBudget(
        round(by_label.get("reset", 0.0), 10),
        round(by_label.get("gate", 0.0), 10),
        round(by_label.get("shift", 0.0), 10),
        round(by_label.get("check", 0.0), 10),
        round(by_label.get("measure", 0.0), 10),
    )


@dataclasses.dataclass
class SecLayout:
    """Qubit indices used by the SEC compiler."""

    n: int
    ldu: bool

    @property
    def num_qubits(self) -> int:
        return 3 * self.n if self.ldu else 2 * self.n

    def data(self, row: int) -> np.ndarray:
        base = 0 if row == 0 else 2 * self.n
        return np.arange(base, base + self.n)

    @property
    def x_ancillas(self) -> np.ndarray:
        return np.arange(self.n, self.n + self.n // 2)

    @property
    def z_ancillas(self) -> np.ndarray:
        return np.arange(self.n + self.n // 2, 2 * self.n)

    @property
    def ancillas(self) -> np.ndarray:
        return np.arange(self.n, 2 * self.n)


@dataclasses.dataclass(frozen=True)
class BeaconPlan:
    """Which gate layers are followed by a loss check, and on which data.

    The default checks every data qubit after every layer but the last.
    ``stride=2`` halves the check frequency, ``share=0.5`` the beacon count.
    """

    stride: int = 1
    share: float = 1.0

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ScheduleError(f"beacon stride must be positive, got {self.stride}")
        if not 0.0 < self.share <= 1.0:
            raise ScheduleError(f"beacon share must lie in (0, 1], got {self.share}")

    def check_after(self, tau: int, w: int) -> bool:
        return tau < w - 1 and (tau + 1) % self.stride == 0

    def targets(self, data: np.ndarray) -> tuple[int, ...]:
        count = math.ceil(len(data) * self.share)
        return tuple(int(q) for q in data[:count])


HALF_FREQUENCY = BeaconPlan(stride=2)
HALF_COUNT = BeaconPlan(share=0.5)


@dataclasses.dataclass
class SecRecord:
    """Measurement indices produced by one SEC."""

    x_checks: list[int]
    z_checks: list[int]
    ldu: list[int]
    data_row: int
    """Row holding the data after this SEC."""


def _gate_layer(
    code: ThreeRingCode, layout: SecLayout, row: int, pair: tuple[Term, Term]
) -> list[Instruction]:
    half = code.group_size
    data = layout.data(row)
    tx, tz = pair
    gx = tx.monomial(code)
    gz = tz.monomial(code)
    # X check g touches g + a (left) or g + b (right)
    xq = code.shift_indices(gx)
    x_targets = data[xq] if tx.family == "A" else data[half + xq]
    # Z check h touches h - a (right) or h - b (left)
    zq = code.shift_indices(gz, sign=-1)
    z_targets = data[half + zq] if tz.family == "A" else data[zq]
    cx = [int(v) for pair_ in zip(layout.x_ancillas, x_targets) for v in pair_]
    cz = [int(v) for pair_ in zip(layout.z_ancillas, z_targets) for v in pair_]
    return [Instruction("CX", tuple(cx)), Instruction("CZ", tuple(cz))]


def _emit_sec(
    circuit: Circuit,
    code: ThreeRingCode,
    schedule: Schedule,
    augment: str,
    data_row: int,
    prepare_ancillas: bool,
    beacons: BeaconPlan,
) -> SecRecord:
    layout = SecLayout(code.n, augment == "beacon+LDU")
    ancillas = tuple(int(q) for q in layout.ancillas)
    ldu_records: list[int] = []
    if augment == "beacon+LDU":
        data = layout.data(data_row)
        fresh = layout.data(1 - data_row)
        pairs = tuple(int(v) for f, d in zip(fresh, data) for v in (f, d))
        circuit.append([Instruction("CX", pairs)], label="check")
        ldu_records = circuit.append(
            [Instruction("MZ", tuple(int(q) for q in data), reset="X")], label="reset"
        )
        circuit.append(
            [Instruction("SHIFT", tuple(int(q) for q in fresh), (1.0,))],
            duration=1 / TRANSPORT_STEPS_PER_POC,
            kind="transport",
            label="check",
        )
        data_row = 1 - data_row
    elif prepare_ancillas:
        circuit.append([Instruction("RX", ancillas)], label="reset")

    checked = beacons.targets(layout.data(data_row))
    w = len(schedule)
    for tau, pair in enumerate(schedule):
        if tau > 0:
            steps, r, sx, tx, sz, tz = shift_between(code, schedule.pairs[tau - 1], pair)
            if steps:
                circuit.append(
                    [Instruction("SHIFT", ancillas, (float(steps), r, sx, tx, sz, tz))],
                    duration=steps / TRANSPORT_STEPS_PER_POC,
                    kind="transport",
                    label="shift",
                )
        circuit.append(_gate_layer(code, layout, data_row, pair), label="gate")
        if augment != "none" and beacons.check_after(tau, w):
            circuit.append([Instruction("LOSS_CHECK", checked)], label="check")

    records = circuit.append(
        [Instruction("MX", ancillas, reset="X" if augment == "beacon+LDU" else None)],
        label="measure",
    )
    half = code.group_size
    return SecRecord(records[:half], records[half:], ldu_records, data_row)


@dataclasses.dataclass
class CompiledSec:
    circuit: Circuit
    budget: SecBudget


def compile_sec(
    code: ThreeRingCode,
    schedule: Schedule,
    augment: str = "none",
    beacons: typing.Optional[BeaconPlan] = None,
) -> CompiledSec:
    """Compile one syndrome extraction cycle.

    ``none`` prepares the ancillas, runs the gate layers with cyclic
    shifts between them and measures the ancillas. ``beacon`` adds a
    loss check after every gate layer but the last. ``beacon+LDU``
    starts by teleporting the data into the fresh row, flagging leaked
    data qubits, and resets the measured ancillas for the next cycle.

    :raises ScheduleError: for an invalid schedule or ``a ≠ 2``.
    """
    if augment not in AUGMENTS:
        raise ScheduleError(f"unknown augmentation {augment!r}, choose from {AUGMENTS}")
    check_schedule(code, schedule)
    layout = SecLayout(code.n, augment == "beacon+LDU")
    circuit = Circuit(layout.num_qubits)
    _emit_sec(circuit, code, schedule, augment, 0, True, beacons or BeaconPlan())
    budget = budget_of(circuit)
    log.info("compiled %s SEC for %r: %.2f POC", augment, code, budget.total)
    return CompiledSec(circuit, budget)


def memory_experiment(
    code: ThreeRingCode,
    schedule: Schedule,
    rounds: int,
    augment: str = "none",
    basis: str = "Z",
    beacons: typing.Optional[BeaconPlan] = None,
) -> Circuit:
    """Repeated SECs on a logical basis state with detectors and observables.

    Data starts in ``|0…0⟩`` (``basis="Z"``) or ``|+…+⟩`` and is read out
    transversally at the end. Detector ``t`` of a check compares its
    outcomes in rounds ``t`` and ``t-1``; checks of the other basis start
    at round 1. Data teleportation outcomes of the leakage detection unit
    enter the Z detectors and observables as X frame corrections.

    :raises ScheduleError: for an invalid schedule.
    :raises CircuitError: for ``rounds < 1`` or an unknown basis.
    """
    if rounds < 1:
        raise CircuitError("a memory experiment needs at least one round")
    if basis not in ("X", "Z"):
        raise CircuitError(f"basis must be X or Z, got {basis!r}")
    if augment not in AUGMENTS:
        raise ScheduleError(f"unknown augmentation {augment!r}")
    check_schedule(code, schedule)
    beacons = beacons or BeaconPlan()
    ldu = augment == "beacon+LDU"
    layout = SecLayout(code.n, ldu)
    circuit = Circuit(layout.num_qubits)

    prep = "RZ" if basis == "Z" else "RX"
    init = [Instruction(prep, tuple(int(q) for q in layout.data(0)))]
    if ldu:
        init.append(Instruction("RX", tuple(int(q) for q in layout.ancillas)))
        init.append(Instruction("RX", tuple(int(q) for q in layout.data(1))))
    circuit.append(init, label="init")

    hx = code.hx.dense
    hz = code.hz.dense
    sec_records: list[SecRecord] = []
    row = 0
    for t in range(rounds):
        rec = _emit_sec(circuit, code, schedule, augment, row, not ldu, beacons)
        sec_records.append(rec)
        row = rec.data_row

    final_op = "MZ" if basis == "Z" else "MX"
    final = circuit.append(
        [Instruction(final_op, tuple(int(q) for q in layout.data(row)))], label="measure"
    )

    def support_records(records: list[int], row_bits: np.ndarray) -> list[int]:
        return [records[int(q)] for q in np.flatnonzero(row_bits)]

    for label, checks in (("X", hx), ("Z", hz)):
        first = 0 if label == basis else 1
        for c in range(checks.shape[0]):
            for t in range(first, rounds):
                rec = sec_records[t]
                cur = rec.x_checks[c] if label == "X" else rec.z_checks[c]
                parts = [cur]
                if t > 0:
                    prev = sec_records[t - 1]
                    parts.append(prev.x_checks[c] if label == "X" else prev.z_checks[c])
                if label == "Z" and rec.ldu:
                    parts.extend(support_records(rec.ldu, checks[c]))
                circuit.detectors.append(tuple(sorted(parts)))
                circuit.detector_info.append(DetectorInfo(t, label, c))
            if label == basis:
                last = sec_records[-1]
                last_rec = last.x_checks[c] if label == "X" else last.z_checks[c]
                parts = support_records(final, checks[c]) + [last_rec]
                circuit.detectors.append(tuple(sorted(parts)))
                circuit.detector_info.append(DetectorInfo(rounds, label, c))

    logicals = code.basis.lz if basis == "Z" else code.basis.lx
    for row_bits in logicals:
        parts = support_records(final, row_bits)
        if basis == "Z":
            for rec in sec_records:
                parts.extend(support_records(rec.ldu, row_bits) if rec.ldu else [])
        circuit.observables.append(tuple(sorted(parts)))
    log.info(
        "memory experiment: %d rounds, %d detectors, %d observables, %.2f POC",
        rounds,
        len(circuit.detectors),
        len(circuit.observables),
        circuit.duration,
    )
    return circuit
