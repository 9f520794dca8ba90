"""Resource estimates for architecture configurations.

A configuration such as ``17xQ70+3xMEK`` names the memory blocks and the
magic state factories of a machine. From it follow the physical qubit
allocation (components, reservoir and the transport overhead of cat
states and Bell pairs), the durations of the logical operations and the
T-gate throughput.
"""

from __future__ import annotations

import dataclasses
import functools
import logging
import math
import re
import typing

from walkingcat import WalkingCatError
from walkingcat.catbell import BELL_FACTORY_QUBITS, bell_sizing
from walkingcat.codes import lookup
from walkingcat.logical import BLOCK_WIDTHS
from walkingcat.magic import factory_model
from walkingcat.measure import LMTIME, MeasureParams, viterbi_duration
from walkingcat.schedule import PUBLISHED_BUDGETS, TRANSPORT_STEPS_PER_POC

log = logging.getLogger("walkingcat.estimator")

POC_TIME = 200e-6
TRANSPORT_STEP_TIME = POC_TIME / TRANSPORT_STEPS_PER_POC
RESERVOIR_QUBITS = 200
MEMORY_OVERHEAD = 10
"""Qubits beyond ``3n`` in a memory block (loss checks and LDU spares)."""
FACTORY_OVERHEAD = 11
BLOCK_ROWS = 4
SECONDS_PER_DAY = 86_400


@dataclasses.dataclass(frozen=True)
class CodeProfile:
    name: str
    n: int
    k: int
    sec_poc: float
    width: int
    """Cat weight needed to measure the accessible logical Paulis."""

    @property
    def sec_time(self) -> float:
        return self.sec_poc * POC_TIME


@functools.lru_cache(maxsize=None)
def code_profile(name: str) -> CodeProfile:
    key = name.upper()
    if key not in PUBLISHED_BUDGETS or key not in BLOCK_WIDTHS:
        raise WalkingCatError(f"no SEC budget or block width for memory code {name!r}")
    record = lookup(key)
    return CodeProfile(key, record.n, record.k, PUBLISHED_BUDGETS[key], BLOCK_WIDTHS[key][1])


@dataclasses.dataclass(frozen=True)
class FactoryProfile:
    kind: str
    host: CodeProfile
    width: int
    n_sec_avg: float

    @property
    def lt(self) -> float:
        """Seconds per produced pair of H states."""
        return self.n_sec_avg * self.host.sec_time


@functools.lru_cache(maxsize=None)
def factory_profile(kind: str) -> FactoryProfile:
    model = factory_model(kind)
    return FactoryProfile(model.kind, code_profile(model.host), model.width, model.n_sec_avg)


_TERM = re.compile(r"^\s*(\d+)\s*[x×*]\s*([A-Za-z][A-Za-z0-9]*)\s*$")


@dataclasses.dataclass(frozen=True)
class ArchConfig:
    memory_code: str
    memories: int
    factory_kind: typing.Optional[str] = None
    factories: int = 0

    def __post_init__(self) -> None:
        if self.memories < 0 or self.factories < 0:
            raise ValueError("block counts must be non-negative")
        if self.memories + self.factories == 0:
            raise ValueError("a configuration needs at least one block")
        if self.factories and self.factory_kind is None:
            raise ValueError("factories need a kind")

    @classmethod
    def parse(cls, text: str) -> ArchConfig:
        """Parse ``"17xQ70+3xMEK"``; ``×`` works as well as ``x``.

        :raises WalkingCatError: on unknown block names or repeated terms.
        """
        memory: typing.Optional[tuple[str, int]] = None
        factory: typing.Optional[tuple[str, int]] = None
        for term in text.split("+"):
            match = _TERM.match(term)
            if match is None:
                raise WalkingCatError(f"malformed configuration term {term.strip()!r} in {text!r}")
            count, name = int(match.group(1)), match.group(2).upper()
            if name in PUBLISHED_BUDGETS:
                if memory is not None:
                    raise WalkingCatError(f"more than one memory term in {text!r}")
                memory = (name, count)
            elif name in ("CH2", "MEK"):
                if factory is not None:
                    raise WalkingCatError(f"more than one factory term in {text!r}")
                factory = (name, count)
            else:
                raise WalkingCatError(f"unknown block {match.group(2)!r} in {text!r}")
        if memory is None:
            raise WalkingCatError(f"configuration {text!r} names no memory code")
        return cls(
            memory_code=memory[0],
            memories=memory[1],
            factory_kind=factory[0] if factory else None,
            factories=factory[1] if factory else 0,
        )

    @property
    def memory(self) -> CodeProfile:
        return code_profile(self.memory_code)

    @property
    def factory(self) -> typing.Optional[FactoryProfile]:
        return factory_profile(self.factory_kind) if self.factory_kind else None

    @property
    def blocks(self) -> int:
        return self.memories + self.factories

    def __str__(self) -> str:
        text = f"{self.memories}x{self.memory_code}"
        if self.factory_kind and self.factories:
            text += f"+{self.factories}x{self.factory_kind}"
        return text


# qubit allocation


@dataclasses.dataclass(frozen=True)
class Transport:
    width: int
    height: int
    loop: int
    """Unit steps around the enclosing rectangle."""
    time: float
    """Loop duration in SEC of the memory code."""
    cat: int
    bell: int


def transport(config: ArchConfig) -> Transport:
    """Qubits in flight while cats and Bell pairs travel around the machine.

    Every block is laid out as one row of height four holding the code
    and its cat factory (``n + 2w̄`` sites), with an empty row between
    blocks. A qubit circling the enclosing rectangle is absent from its
    component for ``t`` SEC, so every component keeps ``⌈t·flow⌉`` extra
    qubits in transit.
    """
    mem = config.memory
    rows = [mem.n + 2 * mem.width] * config.memories
    cat_flows = [mem.width] * config.memories
    factory = config.factory
    if factory is not None:
        rows += [factory.host.n + 2 * factory.width] * config.factories
        cat_flows += [factory.width] * config.factories
    width = max(rows)
    height = (BLOCK_ROWS + 1) * config.blocks - 1
    loop = 2 * (width + height) + 4
    t = loop / (TRANSPORT_STEPS_PER_POC * mem.sec_poc)
    bells = bell_sizing(config.blocks)
    cat = sum(math.ceil(t * flow) for flow in cat_flows)
    bell = bells.factories * math.ceil(t * bells.flow)
    log.debug("%s: loop %d steps, %.4f SEC in transit", config, loop, t)
    return Transport(width, height, loop, t, cat, bell)


@dataclasses.dataclass(frozen=True)
class Allocation:
    memory: int
    magic: int
    cat: int
    bell: int
    reservoir: int
    cat_transport: int
    bell_transport: int

    @property
    def total(self) -> int:
        return sum(dataclasses.astuple(self))

    def percentages(self) -> dict[str, float]:
        total = self.total
        return {name: 100.0 * value / total for name, value in dataclasses.asdict(self).items()}

    def as_dict(self) -> dict[str, int]:
        return {**dataclasses.asdict(self), "total": self.total}


def allocate(config: ArchConfig) -> Allocation:
    mem = config.memory
    factory = config.factory
    magic = cat = 0
    if factory is not None:
        magic = config.factories * (3 * factory.host.n + FACTORY_OVERHEAD)
        cat = config.factories * 2 * factory.width
    cat += config.memories * 2 * mem.width
    bells = bell_sizing(config.blocks)
    moving = transport(config)
    allocation = Allocation(
        memory=config.memories * (3 * mem.n + MEMORY_OVERHEAD),
        magic=magic,
        cat=cat,
        bell=bells.factories * BELL_FACTORY_QUBITS,
        reservoir=RESERVOIR_QUBITS,
        cat_transport=moving.cat,
        bell_transport=moving.bell,
    )
    log.info("%s: %d physical qubits", config, allocation.total)
    return allocation


# logical operation times


def _bucket(w: int) -> int:
    for row in sorted(LMTIME):
        if row >= w:
            return row
    return max(LMTIME)


def measure_time(w: int, sec_time: float, bucket: bool = False) -> float:
    """Viterbi measurement of weight ``w`` plus one SEC of reaction time."""
    if bucket:
        w = _bucket(w)
    return (viterbi_duration(MeasureParams(w=w)) + 1) * sec_time


@dataclasses.dataclass(frozen=True)
class OpTimes:
    lz: float
    lp: float
    lt: float
    lm1: float
    lm2: float
    clif: float
    swap: float
    dm: float
    t2: float
    """Two T gates on memory qubits from one pair of H states."""

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


def _lm2(a: CodeProfile, b: CodeProfile, bucket: bool) -> float:
    return measure_time(a.width + b.width, max(a.sec_time, b.sec_time), bucket)


def op_times(config: ArchConfig, bucket: bool = False) -> OpTimes:
    """Average durations of the logical instructions in seconds.

    :param bucket: Round joint measurement weights up to the tabulated
        weights instead of evaluating the Viterbi test at the exact weight.
    """
    mem = config.memory
    factory = config.factory or factory_profile("CH2")
    lm1 = measure_time(mem.width, mem.sec_time)
    if factory.kind == "CH2":
        t2 = factory.lt + 2 * _lm2(factory.host, mem, bucket) + factory.host.sec_time
    else:
        t2 = factory.lt + 2 * (
            _lm2(factory.host, mem, bucket) + measure_time(factory.host.width, factory.host.sec_time)
        )
    return OpTimes(
        lz=mem.sec_time,
        lp=mem.sec_time,
        lt=factory.lt,
        lm1=lm1,
        lm2=_lm2(mem, mem, bucket),
        clif=0.0,
        swap=0.0,
        dm=mem.sec_time,
        t2=t2,
    )


def logical_qubits(config: ArchConfig) -> int:
    return config.memories * config.memory.k


def t_gates_per_day(config: ArchConfig) -> float:
    """Each factory delivers two T gates per double-T instruction."""
    if not config.factories:
        return 0.0
    return config.factories * 2 * SECONDS_PER_DAY / op_times(config).t2


def single_code_tradeoff(n_t: int, m: int) -> tuple[int, float]:
    """``n_t`` Q70 blocks of which ``m`` serve as memory and the rest run MEK.

    :return: logical qubits and T gates per day.
    """
    if not 0 <= m <= n_t:
        raise ValueError(f"memory share must lie in [0, {n_t}], got {m}")
    factory = factory_profile("MEK")
    host = factory.host
    if m == n_t:
        return n_t * host.k, 0.0
    config = ArchConfig(host.name, m, "MEK", n_t - m)
    return m * host.k, (n_t - m) * 2 * SECONDS_PER_DAY / op_times(config).t2


@dataclasses.dataclass(frozen=True)
class Estimate:
    config: ArchConfig
    allocation: Allocation
    op_times: OpTimes
    logical_qubits: int
    t_per_day: float
    transport: Transport

    def as_dict(self) -> dict[str, typing.Any]:
        return {
            "config": str(self.config),
            "logical_qubits": self.logical_qubits,
            "t_per_day": self.t_per_day,
            "allocation": self.allocation.as_dict(),
            "percentages": self.allocation.percentages(),
            "op_times": self.op_times.as_dict(),
            "transport": dataclasses.asdict(self.transport),
        }


def estimate(config: typing.Union[ArchConfig, str]) -> Estimate:
    if isinstance(config, str):
        config = ArchConfig.parse(config)
    return Estimate(
        config=config,
        allocation=allocate(config),
        op_times=op_times(config),
        logical_qubits=logical_qubits(config),
        t_per_day=t_gates_per_day(config),
        transport=transport(config),
    )


PUBLISHED_ALLOCATIONS: dict[str, tuple[int, float, int, int, int, int, int, int, int, int]] = {
    # logical, T/day, memory, magic, cat, bell, reservoir, cat transport, bell transport, total
    "17xQ70+3xMEK": (102, 1.3e6, 3740, 663, 720, 84, 200, 280, 35, 5722),
    "17xQ70+1xCH2": (102, 1.1e6, 3740, 173, 720, 72, 200, 339, 36, 5280),
    "5xQ102+1xCH2": (110, 1.0e6, 1580, 173, 408, 24, 200, 121, 8, 2514),
    "17xQ70+24xMEK": (102, 10.4e6, 3740, 5304, 1476, 168, 200, 861, 98, 11847),
    "17xQ70+9xCH2": (102, 10.3e6, 3740, 1557, 1584, 108, 200, 862, 63, 8114),
    "5xQ102+10xCH2": (110, 10.5e6, 1580, 1730, 1380, 60, 200, 500, 25, 5475),
    "34xQ70+3xMEK": (204, 1.3e6, 7480, 663, 1332, 156, 200, 703, 91, 10625),
    "34xQ70+1xCH2": (204, 1.1e6, 7480, 173, 1332, 144, 200, 814, 96, 10239),
    "10xQ102+1xCH2": (220, 1.0e6, 3160, 173, 708, 48, 200, 235, 16, 4540),
    "34xQ70+24xMEK": (204, 10.4e6, 7480, 5304, 2088, 240, 200, 1508, 180, 17000),
    "34xQ70+9xCH2": (204, 10.3e6, 7480, 1557, 2196, 180, 200, 1516, 135, 13264),
    "10xQ102+10xCH2": (220, 10.5e6, 3160, 1730, 1680, 84, 200, 670, 35, 7559),
    "50xQ70+3xMEK": (300, 1.3e6, 11000, 663, 1908, 216, 200, 1325, 162, 15474),
    "50xQ70+1xCH2": (300, 1.1e6, 11000, 173, 1908, 204, 200, 1482, 170, 15137),
    "14xQ102+1xCH2": (308, 1.0e6, 4424, 173, 948, 60, 200, 347, 25, 6177),
    "50xQ70+24xMEK": (300, 10.4e6, 11000, 5304, 2664, 300, 200, 2294, 275, 22037),
    "50xQ70+9xCH2": (300, 10.3e6, 11000, 1557, 2772, 240, 200, 2310, 200, 18279),
    "14xQ102+10xCH2": (308, 10.5e6, 4424, 1730, 1920, 96, 200, 824, 48, 9242),
}

PUBLISHED_OP_TIMES: dict[str, dict[str, float]] = {
    "Q70": {"lz": 0.0055, "lm1": 0.0337, "lm2": 0.0342, "dm": 0.0055, "t2_CH2": 0.1507, "t2_MEK": 0.4000},
    "Q102": {"lz": 0.0067, "lm1": 0.0414, "lm2": 0.0495, "dm": 0.0067, "t2_CH2": 0.1652, "t2_MEK": 0.4297},
}
"""Average operation times in seconds; ``LT`` is 0.0757 for CH2 and 0.2643 for MEK."""

PUBLISHED_LT: dict[str, float] = {"CH2": 0.0757, "MEK": 0.2643}
