"""Staircase detector models and the streaming sliding-window decoder.

With detectors ``d_0 = s_0`` and ``d_i = s_i ⊕ s_{i-1}`` the check matrix
of ``r`` repeated SECs is an ``r × (2r-1)`` block staircase::

    H0'  H1
         H2  H0  H1
                 H2  H0  H1
                         H2  H0''

Even block columns hold faults seen by a single detector round, odd
block columns faults seen by two consecutive rounds. A ``(w, c)``
window decoder solves ``w`` rounds at a time and commits the first
``2c`` block columns.
"""

from __future__ import annotations

import dataclasses
import logging
import time
import typing

import numpy as np
import numpy.typing as npt
from ldpc.bp_decoder import BpDecoder
from ldpc.bposd_decoder import BpOsdDecoder
from scipy import sparse

from walkingcat import StreamError
from walkingcat.gf2 import BitMatrix
from walkingcat.schedule import Circuit
from walkingcat.simkit import NoiseParams, error_model, merge_probability

log = logging.getLogger("walkingcat.streamdec")

Vector = npt.NDArray[np.uint8]
Priors = npt.NDArray[np.float64]


@dataclasses.dataclass(frozen=True)
class StaircaseModel:
    """Blocks and priors of the staircase, plus observable blocks.

    ``l*`` hold the logical observable flips of the columns of the
    matching ``h*`` block.
    """

    h0p: BitMatrix
    h1: BitMatrix
    h2: BitMatrix
    h0: BitMatrix
    h0pp: BitMatrix
    p0p: Priors
    p1: Priors
    p0: Priors
    p0pp: Priors
    l0p: BitMatrix
    l1: BitMatrix
    l0: BitMatrix
    l0pp: BitMatrix

    def __post_init__(self) -> None:
        pairs = (
            (self.h0p, self.p0p),
            (self.h1, self.p1),
            (self.h2, self.p1),
            (self.h0, self.p0),
            (self.h0pp, self.p0pp),
        )
        for h, p in pairs:
            if h.cols != len(p):
                raise StreamError("block column count does not match its priors")
        rows = {h.rows for h, _ in pairs}
        if len(rows) != 1:
            raise StreamError("all blocks need the same number of detector rows")

    @property
    def detectors_per_round(self) -> int:
        return self.h0.rows

    @property
    def num_observables(self) -> int:
        return self.l0.rows

    def block(self, index: int, r: int) -> tuple[BitMatrix, BitMatrix, Priors]:
        """``(H, L, p)`` of global block column ``index``; odd blocks stack H1 over H2."""
        last = 2 * r - 2
        if index == 0:
            return self.h0p, self.l0p, self.p0p
        if index == last:
            return self.h0pp, self.l0pp, self.p0pp
        if index % 2:
            return self.h1, self.l1, self.p1
        return self.h0, self.l0, self.p0

    def block_sizes(self, r: int) -> list[int]:
        return [len(self.block(i, r)[2]) for i in range(2 * r - 1)]


@dataclasses.dataclass(frozen=True)
class WindowConfig:
    w: int
    c: int

    def __post_init__(self) -> None:
        if not 1 <= self.c < self.w:
            raise ValueError(f"window needs 1 <= c < w, got (w={self.w}, c={self.c})")

    @classmethod
    def parse(cls, text: str) -> WindowConfig:
        try:
            w, c = (int(v) for v in text.split(","))
        except ValueError as exc:
            raise ValueError(f"window must be 'w,c', got {text!r}") from exc
        return cls(w, c)


def window_plan(r: int, w: int, c: int) -> tuple[int, int]:
    """Number of windows and the size of the last one."""
    if r < 1 or w < 1 or c < 1:
        raise ValueError("r, w and c must be positive")
    if r <= w:
        return 1, r
    n_win = (r - w - 1) // c + 2
    return n_win, r - (n_win - 1) * c


# model construction


def _dense_columns(columns: typing.Sequence[typing.Iterable[int]], rows: int) -> BitMatrix:
    dense = np.zeros((rows, len(columns)), dtype=np.uint8)
    for j, col in enumerate(columns):
        for i in col:
            dense[i, j] = 1
    return BitMatrix.from_dense(dense)


def phenomenological_model(
    h: typing.Any, logicals: typing.Any, p_data: float, p_meas: float
) -> StaircaseModel:
    """Staircase of a code with data errors before each round and noisy syndromes.

    Data errors show up in one detector round, measurement errors in two.
    A measurement error in the last round is seen by the last round only.
    """
    h = np.asarray(h, dtype=np.uint8)
    logicals = np.asarray(logicals, dtype=np.uint8)
    m, n = h.shape
    k = logicals.shape[0]
    eye = np.eye(m, dtype=np.uint8)
    data_l = BitMatrix.from_dense(logicals)
    meas_l = BitMatrix.zeros(k, m)
    return StaircaseModel(
        h0p=BitMatrix.from_dense(h),
        h1=BitMatrix.from_dense(eye),
        h2=BitMatrix.from_dense(eye),
        h0=BitMatrix.from_dense(h),
        h0pp=BitMatrix.from_dense(np.hstack([h, eye])),
        p0p=np.full(n, p_data),
        p1=np.full(m, p_meas),
        p0=np.full(n, p_data),
        p0pp=np.concatenate([np.full(n, p_data), np.full(m, p_meas)]),
        l0p=data_l,
        l1=meas_l,
        l0=data_l,
        l0pp=BitMatrix.from_dense(np.hstack([logicals, np.zeros((k, m), dtype=np.uint8)])),
    )


@dataclasses.dataclass
class _Block:
    first: list[tuple[int, ...]] = dataclasses.field(default_factory=list)
    second: list[tuple[int, ...]] = dataclasses.field(default_factory=list)
    obs: list[tuple[int, ...]] = dataclasses.field(default_factory=list)
    priors: list[float] = dataclasses.field(default_factory=list)

    def canonical(self) -> tuple[list[tuple[typing.Any, ...]], Priors]:
        order = sorted(
            range(len(self.priors)), key=lambda j: (self.first[j], self.second[j], self.obs[j])
        )
        keys = [(self.first[j], self.second[j], self.obs[j]) for j in order]
        return keys, np.asarray([self.priors[j] for j in order], dtype=np.float64)


def _readout_basis(circuit: Circuit) -> str:
    if not circuit.detector_info:
        raise StreamError("circuit carries no detector round information")
    last_round = max(info.round for info in circuit.detector_info)
    return next(i.basis for i in circuit.detector_info if i.round == last_round)


def detector_order(circuit: Circuit, basis: typing.Optional[str] = None) -> npt.NDArray[np.intp]:
    """Columns of sampled detectors that give the staircase stream, round by round."""
    basis = basis or _readout_basis(circuit)
    keyed = sorted(
        (info.round, info.check, j)
        for j, info in enumerate(circuit.detector_info)
        if info.basis == basis
    )
    return np.array([j for _, _, j in keyed], dtype=np.intp)


def build_staircase(
    circuit: Circuit, noise: NoiseParams, basis: typing.Optional[str] = None
) -> StaircaseModel:
    """Extract the five staircase blocks from a repeated-SEC memory circuit.

    Only the detectors of ``basis`` enter the model; by default this is
    the basis read out at the end, whose detectors start in round 0.

    :raises StreamError: for fewer than three detector rounds or a
        circuit whose interior rounds differ.
    """
    basis = basis or _readout_basis(circuit)
    keep = [j for j, info in enumerate(circuit.detector_info) if info.basis == basis]
    infos = [circuit.detector_info[j] for j in keep]
    rounds = sorted({info.round for info in infos})
    r = len(rounds)
    if r < 3 or rounds != list(range(r)):
        raise StreamError(f"need at least three consecutive detector rounds, got {rounds}")
    per_round = sum(1 for info in infos if info.round == 0)
    if any(sum(1 for i in infos if i.round == t) != per_round for t in rounds):
        raise StreamError("detector rounds differ in size")

    filtered = dataclasses.replace(
        circuit,
        detectors=[circuit.detectors[j] for j in keep],
        detector_info=infos,
    )
    model = error_model(filtered, noise)
    checks = sorted({info.check for info in infos})
    local = {c: i for i, c in enumerate(checks)}
    where = [(info.round, local[info.check]) for info in infos]

    blocks = [_Block() for _ in range(2 * r - 1)]
    dropped = 0
    for j in range(model.num_faults):
        dets, obs = model.column(j)
        if not dets:
            dropped += 1
            continue
        layers = sorted({where[d][0] for d in dets})
        if len(layers) == 1:
            index = 2 * layers[0]
        elif len(layers) == 2 and layers[1] == layers[0] + 1:
            index = 2 * layers[0] + 1
        else:
            raise StreamError(f"fault spans detector rounds {layers}")
        t0 = layers[0]
        block = blocks[index]
        block.first.append(tuple(sorted(where[d][1] for d in dets if where[d][0] == t0)))
        block.second.append(tuple(sorted(where[d][1] for d in dets if where[d][0] == t0 + 1)))
        block.obs.append(tuple(sorted(obs)))
        block.priors.append(float(model.priors[j]))
    if dropped:
        log.warning("%d undetectable fault classes left out of the staircase", dropped)

    canon = [b.canonical() for b in blocks]

    def same(a: int, b: int) -> bool:
        ka, pa = canon[a]
        kb, pb = canon[b]
        return ka == kb and np.allclose(pa, pb, rtol=1e-6, atol=1e-15)

    for index in range(3, 2 * r - 2, 2):
        if not same(1, index):
            raise StreamError(f"odd block column {index} differs from block column 1")
    for index in range(4, 2 * r - 3, 2):
        if not same(2, index):
            raise StreamError(f"even block column {index} differs from block column 2")

    k = len(circuit.observables)

    def matrices(index: int) -> tuple[BitMatrix, BitMatrix, BitMatrix, Priors]:
        keys, priors = canon[index]
        h_first = _dense_columns([key[0] for key in keys], per_round)
        h_second = _dense_columns([key[1] for key in keys], per_round)
        obs = _dense_columns([key[2] for key in keys], k)
        return h_first, h_second, obs, priors

    h0p, _, l0p, p0p = matrices(0)
    h1, h2, l1, p1 = matrices(1)
    h0, _, l0, p0 = matrices(2)
    h0pp, _, l0pp, p0pp = matrices(2 * r - 2)
    staircase = StaircaseModel(h0p, h1, h2, h0, h0pp, p0p, p1, p0, p0pp, l0p, l1, l0, l0pp)
    log.info(
        "staircase: %d rounds, %d detectors per round, block columns %d/%d/%d/%d",
        r,
        per_round,
        h0p.cols,
        h1.cols,
        h0.cols,
        h0pp.cols,
    )
    return staircase


# global assembly


@dataclasses.dataclass
class WindowMatrices:
    """A window's check matrix, priors and observable matrix."""

    h: sparse.csr_matrix
    priors: Priors
    observables: sparse.csr_matrix
    block_sizes: list[int]
    rounds: int

    @property
    def num_columns(self) -> int:
        return int(self.h.shape[1])

    def committed_columns(self, blocks: int) -> int:
        return int(sum(self.block_sizes[:blocks]))


def _assemble(
    rows: int,
    columns: typing.Sequence[tuple[int, BitMatrix, typing.Optional[BitMatrix], BitMatrix, Priors]],
    per_round: int,
    k: int,
) -> WindowMatrices:
    """Stack block columns given as ``(row, top, below, L, p)``."""
    h_blocks: list[list[typing.Optional[sparse.csr_matrix]]] = [
        [None] * len(columns) for _ in range(rows)
    ]
    l_blocks: list[sparse.csr_matrix] = []
    priors: list[Priors] = []
    sizes: list[int] = []
    for j, (row, top, below, obs, p) in enumerate(columns):
        h_blocks[row][j] = sparse.csr_matrix(top.dense)
        if below is not None:
            h_blocks[row + 1][j] = sparse.csr_matrix(below.dense)
        l_blocks.append(sparse.csr_matrix(obs.dense))
        priors.append(p)
        sizes.append(len(p))
    # pin every block row height
    for i in range(rows):
        if all(b is None for b in h_blocks[i]):
            h_blocks[i][0] = sparse.csr_matrix((per_round, sizes[0]), dtype=np.uint8)
    for j in range(len(columns)):
        if all(h_blocks[i][j] is None for i in range(rows)):
            h_blocks[0][j] = sparse.csr_matrix((per_round, sizes[j]), dtype=np.uint8)
    h = sparse.bmat(h_blocks, format="csr", dtype=np.uint8)
    obs = (
        sparse.hstack(l_blocks, format="csr", dtype=np.uint8)
        if l_blocks
        else sparse.csr_matrix((k, 0), dtype=np.uint8)
    )
    return WindowMatrices(h, np.concatenate(priors), obs, sizes, rows)


def assemble(model: StaircaseModel, r: int) -> WindowMatrices:
    """Global check matrix, priors and observables of ``r`` detector rounds."""
    if r < 2:
        raise StreamError("a staircase needs at least two detector rounds")
    columns = []
    for index in range(2 * r - 1):
        h, obs, p = model.block(index, r)
        row = index // 2
        below = model.h2 if index % 2 else None
        columns.append((row, h, below, obs, p))
    return _assemble(r, columns, model.detectors_per_round, model.num_observables)


def merge_columns(
    h: BitMatrix, priors: Priors, observables: BitMatrix
) -> tuple[BitMatrix, Priors, BitMatrix]:
    """Fold identical columns of ``h`` into one, combining their priors."""
    dense = h.dense
    seen: dict[bytes, int] = {}
    keep: list[int] = []
    merged: list[float] = []
    for j in range(dense.shape[1]):
        key = dense[:, j].tobytes()
        if key in seen:
            i = seen[key]
            merged[i] = merge_probability(merged[i], float(priors[j]))
        else:
            seen[key] = len(keep)
            keep.append(j)
            merged.append(float(priors[j]))
    return (
        BitMatrix.from_dense(dense[:, keep]),
        np.asarray(merged, dtype=np.float64),
        BitMatrix.from_dense(observables.dense[:, keep]),
    )


@dataclasses.dataclass
class WindowSet:
    first: WindowMatrices
    mid: WindowMatrices
    last: WindowMatrices
    n_windows: int
    w_last: int


def _open_window(model: StaircaseModel, w: int, first: bool) -> WindowMatrices:
    h1m, p1m, l1m = merge_columns(model.h1, model.p1, model.l1)
    columns = []
    for i in range(w):
        if i == 0 and first:
            columns.append((0, model.h0p, None, model.l0p, model.p0p))
        else:
            columns.append((i, model.h0, None, model.l0, model.p0))
        if i < w - 1:
            columns.append((i, model.h1, model.h2, model.l1, model.p1))
        else:
            columns.append((i, h1m, None, l1m, p1m))
    return _assemble(w, columns, model.detectors_per_round, model.num_observables)


def _closing_window(model: StaircaseModel, w_last: int, first: bool) -> WindowMatrices:
    columns = []
    for i in range(w_last):
        if i == w_last - 1:
            columns.append((i, model.h0pp, None, model.l0pp, model.p0pp))
            break
        if i == 0 and first:
            columns.append((0, model.h0p, None, model.l0p, model.p0p))
        else:
            columns.append((i, model.h0, None, model.l0, model.p0))
        columns.append((i, model.h1, model.h2, model.l1, model.p1))
    return _assemble(w_last, columns, model.detectors_per_round, model.num_observables)


def init_windows(model: StaircaseModel, w: int, c: int, r: int) -> WindowSet:
    """The three window types of a ``(w, c)`` decoder over ``r`` rounds.

    The first window starts with ``H0'``, the middle windows with ``H0``;
    both end in the merged ``H1`` block. The last window ends in ``H0''``
    and also starts with ``H0'`` when it is the only window.
    """
    WindowConfig(w, c)
    if r < 2:
        raise StreamError("a staircase needs at least two detector rounds")
    n_win, w_last = window_plan(r, w, c)
    first = _open_window(model, w, first=True)
    mid = _open_window(model, w, first=False)
    last = _closing_window(model, w_last, first=n_win == 1)
    return WindowSet(first, mid, last, n_win, w_last)


# inner decoder


class InnerDecoder(typing.Protocol):
    def decode(self, syndrome: Vector) -> Vector: ...


class MinSumDecoder:
    """Normalized min-sum belief propagation with optional OSD-0.

    A thin wrapper around the ``ldpc`` decoders: ``BpOsdDecoder`` when
    ``osd0`` is set, plain ``BpDecoder`` otherwise. When BP does not
    reproduce the syndrome the OSD-0 stage solves it on the least
    reliable independent columns.
    """

    def __init__(
        self,
        h: typing.Any,
        priors: typing.Any,
        iters: int = 100,
        scale: float = 0.8,
        osd0: bool = True,
    ) -> None:
        self.h = sparse.csr_matrix(h, dtype=np.uint8)
        self.rows, self.cols = self.h.shape
        p = np.clip(np.asarray(priors, dtype=np.float64), 1e-12, 1 - 1e-12)
        if p.shape != (self.cols,):
            raise ValueError("priors must have one entry per column")
        self.iters = iters
        self.scale = scale
        self.osd0 = osd0
        options: dict[str, typing.Any] = {
            "error_channel": p.tolist(),
            "max_iter": iters,
            "bp_method": "minimum_sum",
            "ms_scaling_factor": scale,
            "schedule": "parallel",
        }
        if osd0:
            self._decoder: typing.Any = BpOsdDecoder(
                self.h, osd_method="osd_0", osd_order=0, **options
            )
        else:
            self._decoder = BpDecoder(self.h, **options)

    @property
    def converged(self) -> bool:
        """Whether BP alone satisfied the last syndrome."""
        return bool(self._decoder.converge)

    def syndrome(self, error: Vector) -> Vector:
        return (self.h @ error.astype(np.int64) % 2).astype(np.uint8)

    def decode(self, syndrome: Vector) -> Vector:
        s = np.asarray(syndrome, dtype=np.uint8) & 1
        if s.shape != (self.rows,):
            raise ValueError(f"syndrome has {s.size} bits, expected {self.rows}")
        return np.asarray(self._decoder.decode(s), dtype=np.uint8)


def inner_bp(
    h: typing.Any,
    priors: typing.Any,
    syndrome: typing.Any,
    iters: int = 100,
    osd0: bool = True,
) -> Vector:
    return MinSumDecoder(h, priors, iters=iters, osd0=osd0).decode(
        np.asarray(syndrome, dtype=np.uint8)
    )


DecoderFactory = typing.Callable[[sparse.csr_matrix, Priors], InnerDecoder]


def default_factory(h: sparse.csr_matrix, priors: Priors) -> InnerDecoder:
    return MinSumDecoder(h, priors)


# decoding


@dataclasses.dataclass
class LatencyTrace:
    """Wall-clock decode time per window in microseconds."""

    window_us: list[float] = dataclasses.field(default_factory=list)
    committed_weight: list[int] = dataclasses.field(default_factory=list)
    commit: int = 1

    @property
    def reaction_us(self) -> float:
        """Time spent on the final window."""
        return self.window_us[-1] if self.window_us else 0.0

    def per_sec_us(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.window_us[:-1] or self.window_us) / self.commit

    def summary(self) -> dict[str, float]:
        per_sec = self.per_sec_us()
        return {
            "mean_us": float(np.mean(per_sec)) if per_sec.size else 0.0,
            "p99_us": float(np.percentile(per_sec, 99)) if per_sec.size else 0.0,
            "p999_us": float(np.percentile(per_sec, 99.9)) if per_sec.size else 0.0,
            "reaction_us": self.reaction_us,
        }

    def rows(self) -> list[tuple[int, float, int]]:
        return list(zip(range(len(self.window_us)), self.window_us, self.committed_weight))


@dataclasses.dataclass
class StreamResult:
    error: Vector
    """Committed estimate of the global error vector."""
    observables: Vector
    trace: LatencyTrace


def _split_rounds(detectors: typing.Any, r: int, per_round: int) -> list[Vector]:
    d = np.asarray(detectors, dtype=np.uint8).reshape(-1)
    if d.size < r * per_round:
        raise StreamError(f"detector stream holds {d.size} bits, expected {r * per_round}")
    return [d[t * per_round : (t + 1) * per_round].copy() for t in range(r)]


class StreamingDecoder:
    """A ``(w, c)`` sliding-window decoder over ``r`` detector rounds.

    The window matrices and their inner decoders are set up once and
    reused for every detector stream.
    """

    def __init__(
        self,
        model: StaircaseModel,
        config: WindowConfig,
        r: int,
        factory: DecoderFactory = default_factory,
    ) -> None:
        self.model = model
        self.config = config
        self.r = r
        self.windows = init_windows(model, config.w, config.c, r)
        self.global_sizes = model.block_sizes(r)
        self.offsets = np.concatenate([[0], np.cumsum(self.global_sizes)]).astype(np.intp)
        self.h2 = sparse.csr_matrix(model.h2.dense, dtype=np.uint8)
        self.global_l = assemble(model, r).observables
        self.decoders = {
            "first": factory(self.windows.first.h, self.windows.first.priors),
            "mid": factory(self.windows.mid.h, self.windows.mid.priors),
            "last": factory(self.windows.last.h, self.windows.last.priors),
        }

    def _run(
        self, kind: str, window: WindowMatrices, rounds: list[Vector], trace: LatencyTrace
    ) -> Vector:
        syndrome = np.concatenate(rounds)
        start = time.perf_counter_ns()
        estimate = self.decoders[kind].decode(syndrome)
        trace.window_us.append((time.perf_counter_ns() - start) / 1000)
        return estimate

    def decode(self, detectors: typing.Any) -> StreamResult:
        """Decode one detector stream of ``r`` rounds.

        :raises StreamError: if the stream is shorter than ``r`` rounds.
        """
        w, c, r = self.config.w, self.config.c, self.r
        d = _split_rounds(detectors, r, self.model.detectors_per_round)
        error = np.zeros(int(self.offsets[-1]), dtype=np.uint8)
        trace = LatencyTrace(commit=c)
        n_win, w_last = self.windows.n_windows, self.windows.w_last
        for i in range(n_win - 1):
            kind, window = ("first", self.windows.first) if i == 0 else ("mid", self.windows.mid)
            s = i * c
            estimate = self._run(kind, window, d[s : s + w], trace)
            width = window.committed_columns(2 * c)
            lo = self.offsets[2 * s]
            error[lo : lo + width] = estimate[:width]
            trace.committed_weight.append(int(estimate[:width].sum()))
            tail = estimate[width - len(self.model.p1) : width]
            d[s + c] ^= (self.h2 @ tail.astype(np.int64) % 2).astype(np.uint8)
            log.debug("window %d committed weight %d", i, trace.committed_weight[-1])
        s = r - w_last
        estimate = self._run("last", self.windows.last, d[s:], trace)
        lo = self.offsets[2 * s]
        error[lo:] = estimate
        trace.committed_weight.append(int(estimate.sum()))
        obs = (self.global_l @ error.astype(np.int64) % 2).astype(np.uint8)
        return StreamResult(error, obs, trace)


def stream_decode(
    model: StaircaseModel,
    config: WindowConfig,
    detectors: typing.Any,
    r: int,
    factory: DecoderFactory = default_factory,
) -> StreamResult:
    return StreamingDecoder(model, config, r, factory).decode(detectors)


def global_decode(
    model: StaircaseModel,
    detectors: typing.Any,
    r: int,
    factory: DecoderFactory = default_factory,
) -> StreamResult:
    """Decode all ``r`` rounds at once."""
    whole = assemble(model, r)
    d = np.concatenate(_split_rounds(detectors, r, model.detectors_per_round))
    trace = LatencyTrace(commit=r)
    start = time.perf_counter_ns()
    error = factory(whole.h, whole.priors).decode(d)
    trace.window_us.append((time.perf_counter_ns() - start) / 1000)
    trace.committed_weight.append(int(error.sum()))
    obs = (whole.observables @ error.astype(np.int64) % 2).astype(np.uint8)
    return StreamResult(error, obs, trace)
