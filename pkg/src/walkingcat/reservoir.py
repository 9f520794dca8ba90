"""Global qubit reservoir as a discrete-time Markov chain.

After every SEC all components report their lost qubits, which are
replaced from the reservoir, and the loading zones add one qubit with
probability ``L·Δt``. The occupancy evolves as
``X' = max(0, min(R, X - k + a))``; the system fails when the reservoir
runs dry, so the failure probability is the steady-state mass of the
empty reservoir.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import functools
import logging
import typing

import numpy as np
import numpy.typing as npt
import scipy.linalg

from walkingcat import Settings, WalkingCatError
from walkingcat.catbell import bell_loss_distribution, cat_loss_distribution
from walkingcat.simkit import LossDistribution, published_loss_distribution

log = logging.getLogger("walkingcat.reservoir")

SEC_TIME = 6e-3
FAILURE_THRESHOLD = 1e-10
R_MAX = 500
OPERATING_SLOPE = 3
"""Stop adding loading zones once one more saves at most this many qubits."""

PUBLISHED_OPERATING_POINTS: dict[tuple[int, int, int, int], tuple[int, int]] = {
    (20, 20, 40, 5): (28, 188),
    (5, 5, 10, 2): (15, 139),
}
"""``(#M, #T, #C, #B) -> (L, R)`` with Q102 memories and Q54 factories."""


# loss aggregation


def convolve(a: LossDistribution, b: LossDistribution, limit: typing.Optional[int] = None) -> LossDistribution:
    """Loss of two independent components, optionally lumping counts above ``limit``."""
    pmf = np.convolve(a.pmf, b.pmf)
    tail = a.tail + b.tail - a.tail * b.tail
    if limit is not None and len(pmf) > limit + 1:
        tail += float(pmf[limit + 1 :].sum())
        pmf = pmf[: limit + 1]
    pmf = np.clip(pmf, 0.0, None)
    pmf[0] = max(0.0, 1.0 - float(pmf[1:].sum()) - tail)
    return LossDistribution(pmf, tail)


def power(dist: LossDistribution, count: int, limit: typing.Optional[int] = None) -> LossDistribution:
    """Loss of ``count`` independent copies, by repeated squaring."""
    if count < 0:
        raise ValueError(f"component count must be non-negative, got {count}")
    result = LossDistribution(np.ones(1))
    base = dist
    while count:
        if count & 1:
            result = convolve(result, base, limit)
        count >>= 1
        if count:
            base = convolve(base, base, limit)
    return result


ComponentSpec = typing.Union[
    typing.Mapping[str, tuple[int, LossDistribution]],
    typing.Sequence[tuple[int, LossDistribution]],
]


def aggregate_losses(components: ComponentSpec, limit: typing.Optional[int] = None) -> LossDistribution:
    """Total loss per SEC of all components.

    :param components: ``(count, per-component distribution)`` pairs,
        optionally keyed by component type.
    :param limit: Lump losses above this count into the tail.
    """
    items = components.values() if isinstance(components, typing.Mapping) else components
    total = LossDistribution(np.ones(1))
    for count, dist in items:
        total = convolve(total, power(dist, count, limit), limit)
    log.debug("aggregate loss: mean %.4g, support %d", total.mean, len(total.pmf))
    return total


@dataclasses.dataclass(frozen=True)
class ComponentCounts:
    memory: int
    factories: int
    cats: int
    bells: int

    @classmethod
    def parse(cls, text: str) -> ComponentCounts:
        """``"20,20,40,5"`` for memories, factories, cat and Bell factories."""
        try:
            values = [int(v) for v in text.split(",")]
        except ValueError as exc:
            raise WalkingCatError(f"allocation must be four integers, got {text!r}") from exc
        if len(values) != 4 or min(values) < 0:
            raise WalkingCatError(f"allocation must be four non-negative integers, got {text!r}")
        return cls(*values)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.memory, self.factories, self.cats, self.bells)


def default_components(
    allocation: ComponentCounts,
    memory: str = "Q102",
    factory: str = "Q54",
    cat_w: int = 30,
    cat_m: int = 2,
    p_loss: float = 1e-7,
    p_bell: float = 3.6e-6,
) -> dict[str, tuple[int, LossDistribution]]:
    """Published per-component loss distributions for an allocation."""
    return {
        "M": (allocation.memory, published_loss_distribution(memory)),
        "T": (allocation.factories, published_loss_distribution(factory)),
        "C": (allocation.cats, cat_loss_distribution(cat_w, cat_m, p_loss)),
        "B": (allocation.bells, bell_loss_distribution(p_bell)),
    }


# chain


@dataclasses.dataclass(frozen=True)
class ReservoirChain:
    capacity: int
    loading_zones: int
    losses: LossDistribution = dataclasses.field(repr=False)
    sec_time: float = SEC_TIME

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError(f"reservoir capacity must be positive, got {self.capacity}")
        if self.loading_zones < 0:
            raise ValueError("number of loading zones must be non-negative")
        if self.p_add > 1.0:
            raise ValueError(
                f"{self.loading_zones} loading zones add more than one qubit per SEC"
            )

    @property
    def p_add(self) -> float:
        return self.loading_zones * self.sec_time

    @functools.cached_property
    def survival(self) -> npt.NDArray[np.float64]:
        """``survival[n] = P(k ≥ n)`` for ``n = 0..R+2``."""
        size = self.capacity + 3
        pmf = np.zeros(size)
        head = self.losses.pmf[:size]
        pmf[: len(head)] = head
        beyond = self.losses.tail + float(self.losses.pmf[size:].sum())
        return np.cumsum(pmf[::-1])[::-1] + beyond

    def _loss_pmf(self, k: npt.NDArray[np.intp]) -> npt.NDArray[np.float64]:
        pmf = self.losses.pmf
        out = np.zeros(k.shape)
        inside = k < len(pmf)
        out[inside] = pmf[k[inside]]
        return out

    def transition_matrix(self) -> npt.NDArray[np.float64]:
        r = self.capacity
        matrix = np.zeros((r + 1, r + 1))
        for i in range(r + 1):
            for a, pa in ((0, 1.0 - self.p_add), (1, self.p_add)):
                if pa == 0.0:
                    continue
                top = i + a
                ks = np.arange(top)
                np.add.at(matrix[i], np.minimum(top - ks, r), pa * self._loss_pmf(ks))
                matrix[i, 0] += pa * self.survival[top]
        return matrix

    def _balance(self) -> npt.NDArray[np.float64]:
        """Steady state from the flow balance across every cut ``j | j+1``.

        The occupancy rises by at most one per SEC, so the only upward
        flow across a cut leaves state ``j``. All terms are positive,
        which keeps tiny probabilities accurate.
        """
        r = self.capacity
        surv = self.survival
        down = (1.0 - self.p_add) * surv[: r + 1] + self.p_add * surv[1 : r + 2]
        up = self.p_add * float(self.losses.pmf[0])
        pi = np.zeros(r + 1)
        if up == 0.0:
            pi[0] = 1.0
            return pi
        pi[r] = 1.0
        for j in range(r - 1, -1, -1):
            pi[j] = float(np.dot(pi[j + 1 :], down[1 : r - j + 1])) / up
            if pi[j] > 1e250:
                pi[j:] /= pi[j]
        return pi / pi.sum()

    def _power(self, tol: float = 1e-14, max_iter: int = 1_000_000) -> npt.NDArray[np.float64]:
        matrix = self.transition_matrix()
        pi = np.full(self.capacity + 1, 1.0 / (self.capacity + 1))
        for _ in range(max_iter):
            nxt = pi @ matrix
            if np.abs(nxt - pi).sum() < tol:
                return nxt / nxt.sum()
            pi = nxt
        raise WalkingCatError("power iteration did not converge")

    def _eigen(self) -> npt.NDArray[np.float64]:
        values, vectors = scipy.linalg.eig(self.transition_matrix().T)
        idx = int(np.argmin(np.abs(values - 1.0)))
        pi = np.abs(np.real(vectors[:, idx]))
        return pi / pi.sum()

    def steady_state(self, method: str = "balance") -> npt.NDArray[np.float64]:
        """Stationary occupancy distribution.

        :param method: ``balance`` (default), ``power`` or ``eigen``.
        """
        try:
            solve = {"balance": self._balance, "power": self._power, "eigen": self._eigen}[method]
        except KeyError:
            raise ValueError(f"unknown steady state method {method!r}") from None
        return solve()

    @property
    def failure(self) -> float:
        return float(self.steady_state()[0])

    def mixing_curve(
        self, steps: int = 400, start: typing.Optional[int] = None
    ) -> npt.NDArray[np.float64]:
        """1-norm distance to the steady state after each SEC, from a full reservoir."""
        matrix = self.transition_matrix()
        target = self.steady_state()
        state = np.zeros(self.capacity + 1)
        state[self.capacity if start is None else start] = 1.0
        out = np.zeros(steps + 1)
        out[0] = np.abs(state - target).sum()
        for t in range(1, steps + 1):
            state = state @ matrix
            out[t] = np.abs(state - target).sum()
        return out


def steady_state(chain: ReservoirChain, method: str = "balance") -> npt.NDArray[np.float64]:
    return chain.steady_state(method)


def failure_probability(
    loading_zones: int, capacity: int, losses: LossDistribution, sec_time: float = SEC_TIME
) -> float:
    return ReservoirChain(capacity, loading_zones, losses, sec_time).failure


def min_reservoir(
    loading_zones: int,
    losses: LossDistribution,
    sec_time: float = SEC_TIME,
    eps: float = FAILURE_THRESHOLD,
    r_max: int = R_MAX,
) -> typing.Optional[int]:
    """Smallest capacity with failure probability below ``eps``, by bisection.

    Returns ``None`` if even ``r_max`` does not suffice.
    """
    if failure_probability(loading_zones, r_max, losses, sec_time) >= eps:
        log.debug("L=%d: no capacity up to %d suffices", loading_zones, r_max)
        return None
    lo, hi = 1, r_max
    while lo < hi:
        mid = (lo + hi) // 2
        if failure_probability(loading_zones, mid, losses, sec_time) < eps:
            hi = mid
        else:
            lo = mid + 1
    log.debug("L=%d: minimum capacity %d", loading_zones, lo)
    return lo


@dataclasses.dataclass(frozen=True)
class CurvePoint:
    loading_zones: int
    capacity: typing.Optional[int]


def lr_curve(
    zones: typing.Iterable[int],
    losses: LossDistribution,
    sec_time: float = SEC_TIME,
    eps: float = FAILURE_THRESHOLD,
    r_max: int = R_MAX,
    threads: typing.Optional[int] = None,
) -> list[CurvePoint]:
    """Minimum capacity for each number of loading zones."""
    zones = list(zones)
    losses = _truncated(losses, r_max)
    threads = threads or Settings.from_env().threads

    def run(ell: int) -> CurvePoint:
        return CurvePoint(ell, min_reservoir(ell, losses, sec_time, eps, r_max))

    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        points = list(pool.map(run, zones))
    log.info("L-R curve over %d loading zone counts", len(points))
    return points


def _truncated(losses: LossDistribution, r_max: int) -> LossDistribution:
    if len(losses.pmf) <= r_max + 3:
        return losses
    return convolve(losses, LossDistribution(np.ones(1)), r_max + 2)


def operating_point(
    curve: typing.Sequence[CurvePoint], slope: int = OPERATING_SLOPE
) -> typing.Optional[CurvePoint]:
    """First point where one more loading zone saves at most ``slope`` qubits."""
    by_l = {pt.loading_zones: pt.capacity for pt in curve}
    for pt in sorted(curve, key=lambda p: p.loading_zones):
        nxt = by_l.get(pt.loading_zones + 1)
        if pt.capacity is None or nxt is None:
            continue
        if pt.capacity - nxt <= slope:
            return pt
    return None


def size_reservoir(
    allocation: ComponentCounts,
    zones: typing.Optional[typing.Iterable[int]] = None,
    sec_time: float = SEC_TIME,
    eps: float = FAILURE_THRESHOLD,
    r_max: int = R_MAX,
) -> tuple[list[CurvePoint], typing.Optional[CurvePoint]]:
    """L-R curve and operating point of an allocation with published loss models."""
    losses = aggregate_losses(default_components(allocation), limit=r_max + 2)
    if zones is None:
        zones = range(1, min(int(1 / sec_time), 80) + 1)
    curve = lr_curve(zones, losses, sec_time, eps, r_max)
    return curve, operating_point(curve)


def failure_grid(
    zones: typing.Sequence[int],
    capacities: typing.Sequence[int],
    losses: LossDistribution,
    sec_time: float = SEC_TIME,
) -> npt.NDArray[np.float64]:
    """``log10`` failure probability over a grid of loading zones and capacities."""
    grid = np.zeros((len(zones), len(capacities)))
    for i, ell in enumerate(zones):
        for j, r in enumerate(capacities):
            grid[i, j] = np.log10(max(failure_probability(ell, r, losses, sec_time), 1e-300))
    return grid
