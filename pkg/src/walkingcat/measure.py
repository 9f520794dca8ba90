"""Cat-based logical measurements.

A single cat-based measurement of a logical Pauli of weight ``w̄`` flips
its outcome with probability ``C₁ w̄ p``. Repetitions are aggregated by
unanimity (error detected, EDM), by majority (error corrected, ECM) or
adaptively: a Viterbi measurement stops as soon as the vote margin makes
the likelihood ratio exceed ``(1-ε)/ε``.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import typing

import numpy as np
import numpy.typing as npt
import scipy.linalg

log = logging.getLogger("walkingcat.measure")

C1 = 2.1
C2 = 3.4
MISS_FACTOR = 5.0
"""Missing cat states occur with probability ``5 w̄ p`` by default."""

LMTIME: dict[int, tuple[int, int, float]] = {
    10: (3, 5, 4.04),
    20: (3, 6, 5.10),
    30: (3, 6, 5.14),
    54: (4, 8, 6.31),
}
"""Published durations in SEC by weight: EDM at ε=1e-5, EDM at ε=1e-10, Viterbi."""


@dataclasses.dataclass(frozen=True)
class MeasureParams:
    w: float
    """Representative weight of the measured operator."""
    p: float = 1e-4
    p_log: float = 0.0
    """Logical error rate per SEC of the measured block."""
    c1: float = C1
    c2: float = C2
    eps: float = 1e-10
    p_miss: typing.Optional[float] = None

    def __post_init__(self) -> None:
        if self.w < 0:
            raise ValueError(f"weight must be non-negative, got {self.w}")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("fitted constants must be positive")
        for name in ("p", "p_log"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0.0 < self.eps < 0.5:
            raise ValueError(f"target precision must lie in (0, 1/2), got {self.eps}")
        if self.p_miss is None:
            object.__setattr__(self, "p_miss", min(1.0, MISS_FACTOR * self.w * self.p))
        elif not 0.0 <= self.p_miss < 1.0:
            raise ValueError(f"p_miss must lie in [0, 1), got {self.p_miss}")

    @property
    def miss(self) -> float:
        assert self.p_miss is not None
        return self.p_miss


def p_flip(params: MeasureParams) -> float:
    """Outcome flip probability of one cat-based measurement."""
    return min(1.0, params.c1 * params.w * params.p)


def p_edm(params: MeasureParams, r: int) -> float:
    """Wrong but unanimous outcome after ``r`` repetitions."""
    if r < 1:
        raise ValueError("need at least one repetition")
    return min(1.0, params.c2 * params.p_log + p_flip(params) ** r)


def p_ecm(params: MeasureParams, r: int) -> float:
    """Wrong majority after ``r`` repetitions."""
    if r < 1:
        raise ValueError("need at least one repetition")
    half = math.ceil(r / 2)
    return min(1.0, params.c2 * params.p_log + math.comb(r, half) * p_flip(params) ** half)


def edm_rounds(params: MeasureParams, eps: typing.Optional[float] = None) -> int:
    """Smallest ``r`` with ``p_flip^r ≤ ε``."""
    eps = params.eps if eps is None else eps
    pf = p_flip(params)
    if pf == 0.0:
        return 1
    if pf >= 1.0:
        raise ValueError("a measurement that always flips cannot reach any precision")
    r = max(1, math.ceil(math.log(eps) / math.log(pf)))
    while pf**r > eps:
        r += 1
    while r > 1 and pf ** (r - 1) <= eps:
        r -= 1
    return r


def edm_duration(params: MeasureParams, eps: typing.Optional[float] = None) -> int:
    """EDM length in SEC, including the decoder reaction SEC."""
    return edm_rounds(params, eps) + 1


# Viterbi measurement


def viterbi_margin(params: MeasureParams) -> int:
    """Vote margin ``K`` at which the sequential test halts.

    ``K = ⌈log((1-ε)/ε) / log((1-p_flip)/p_flip)⌉``, at least 1.
    """
    pf = p_flip(params)
    if pf >= 0.5:
        raise ValueError(f"flip probability {pf} leaves no information to vote on")
    if pf == 0.0:
        return 1
    ratio = math.log((1 - params.eps) / params.eps) / math.log((1 - pf) / pf)
    return max(1, math.ceil(ratio - 1e-12))


@dataclasses.dataclass
class ViterbiDistribution:
    """Halting time of a Viterbi measurement, in SEC."""

    margin: int
    expected: float
    pmf: npt.NDArray[np.float64]
    """``pmf[t]`` is the probability to halt after exactly ``t`` SEC."""
    wrong: float
    """Probability to halt on the wrong outcome."""

    def quantile(self, q: float) -> int:
        cdf = np.cumsum(self.pmf)
        idx = int(np.searchsorted(cdf, q * cdf[-1]))
        return min(idx, len(self.pmf) - 1)

    def quantiles(self) -> dict[str, int]:
        return {
            "p50": self.quantile(0.5),
            "p99": self.quantile(0.99),
            "p999": self.quantile(0.999),
        }

    def closed_form(self, params: MeasureParams) -> float:
        pf = p_flip(params)
        return self.margin / ((1 - 2 * pf) * (1 - params.miss))


def _walk(params: MeasureParams) -> tuple[int, float, float, float]:
    k = viterbi_margin(params)
    pf = p_flip(params)
    pm = params.miss
    return k, (1 - pm) * (1 - pf), (1 - pm) * pf, pm


def viterbi_expected(params: MeasureParams) -> float:
    """Exact expected SEC count of the sequential test.

    The vote margin performs a lazy random walk on ``(-K, K)``: a missing
    cat leaves it in place, a correct outcome moves it up and a flipped
    one down. The tridiagonal first-passage system is solved directly.
    """
    k, up, down, stay = _walk(params)
    size = 2 * k - 1
    bands = np.zeros((3, size))
    bands[0, 1:] = -up
    bands[1, :] = 1.0 - stay
    bands[2, :-1] = -down
    times = scipy.linalg.solve_banded((1, 1), bands, np.ones(size))
    return float(times[k - 1])


def viterbi_distribution(
    params: MeasureParams, tol: float = 1e-15, max_sec: int = 100_000
) -> ViterbiDistribution:
    """Halting-time distribution by forward propagation of the margin."""
    k, up, down, stay = _walk(params)
    size = 2 * k - 1
    state = np.zeros(size)
    state[k - 1] = 1.0
    pmf = [0.0]
    wrong = 0.0
    for _ in range(max_sec):
        nxt = stay * state
        nxt[1:] += up * state[:-1]
        nxt[:-1] += down * state[1:]
        halted_right = up * state[-1]
        halted_wrong = down * state[0]
        wrong += halted_wrong
        pmf.append(halted_right + halted_wrong)
        state = nxt
        if state.sum() < tol:
            break
    else:
        log.warning("Viterbi distribution truncated after %d SEC", max_sec)
    dist = ViterbiDistribution(
        margin=k,
        expected=viterbi_expected(params),
        pmf=np.asarray(pmf),
        wrong=wrong,
    )
    log.debug("Viterbi w=%g: K=%d, E[T]=%.4f", params.w, k, dist.expected)
    return dist


def viterbi_duration(params: MeasureParams) -> float:
    """Expected SEC count of a Viterbi measurement, without reaction time."""
    return viterbi_expected(params)


def viterbi_monte_carlo(
    params: MeasureParams, shots: int, seed: int = 0, max_sec: int = 10_000
) -> npt.NDArray[np.int64]:
    """Sampled halting times of the sequential test."""
    k, up, down, _ = _walk(params)
    rng = np.random.default_rng(seed)
    margin = np.zeros(shots, dtype=np.int64)
    times = np.zeros(shots, dtype=np.int64)
    active = np.ones(shots, dtype=np.bool_)
    for _ in range(max_sec):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        u = rng.random(idx.shape[0])
        times[idx] += 1
        margin[idx] += (u < up).astype(np.int64) - ((u >= up) & (u < up + down)).astype(np.int64)
        active[idx] = np.abs(margin[idx]) < k
    return times


def lm_time(w: float, sec_time: float, p: float = 1e-4, eps: float = 1e-10) -> float:
    """Seconds for a Viterbi logical measurement plus one reaction SEC."""
    return (viterbi_duration(MeasureParams(w=w, p=p, eps=eps)) + 1) * sec_time


def lmtime_rows(p: float = 1e-4) -> list[dict[str, typing.Any]]:
    """Recompute the published duration table."""
    rows = []
    for w, published in LMTIME.items():
        params = MeasureParams(w=w, p=p)
        rows.append(
            {
                "w": w,
                "edm_1e-5": edm_duration(params, 1e-5),
                "edm_1e-10": edm_duration(params, 1e-10),
                "viterbi": round(viterbi_duration(params), 2),
                "published": published,
            }
        )
    return rows
