"""Magic state factories.

Both factories inject noisy ``|Ȳ⟩`` states with repeated cat-based
measurements and then distil or verify pairs of logical ``H`` states.
CH2 verifies ``H̄⊗²`` on two injected states of Q54; MEK runs the
Meier–Eastin–Knill circuit on ten injected states of Q70. Logical
operations inside the factory are treated as ideal, so every quantity
follows from the injected fault rate ``q_Y`` and the retry probability.
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
import logging
import math
import typing

import numpy as np
import numpy.typing as npt
from numpy.polynomial import polynomial as P

from walkingcat import WalkingCatError
from walkingcat.measure import C1, C2, MeasureParams, viterbi_duration
from walkingcat.schedule import PUBLISHED_BUDGETS

log = logging.getLogger("walkingcat.magic")

INJECTION_TARGET = 1e-5
MAX_INJECTION_ROUNDS = 64

HOST_LOGICAL_RATES: dict[str, float] = {"Q54": 3e-10, "Q70": 1e-10, "Q102": 1e-11}
"""Logical error rate per SEC of the memory blocks at ``p = 1e-4``."""


@dataclasses.dataclass(frozen=True)
class InjectionModel:
    code: str
    w_inj: int
    r: int
    q_y: float
    """Probability of a ``Ȳ`` fault on an accepted injected state."""
    p_retry: float
    p_flip: float
    p_anc: float
    """Probability that an ancilla loss or leak is detected during injection."""
    depth: float
    """SEC length in POC."""


def round_count(
    w_inj: int,
    p: float,
    p_log: float,
    target: float = INJECTION_TARGET,
    c1: float = C1,
    c2: float = C2,
) -> int:
    """Smallest ``r ≥ 1`` with ``C₂ p_log + (C₁ w p)^r ≤ target``.

    :raises WalkingCatError: if the logical floor alone exceeds the target.
    """
    floor = c2 * p_log
    if floor >= target:
        raise WalkingCatError(f"logical error floor {floor:.3g} exceeds target {target:.3g}")
    pf = c1 * w_inj * p
    for r in range(1, MAX_INJECTION_ROUNDS + 1):
        if floor + pf**r <= target:
            return r
    raise WalkingCatError(f"no round count up to {MAX_INJECTION_ROUNDS} reaches {target:.3g}")


def injection_model(
    code: str,
    w_inj: int,
    p: float = 1e-4,
    p_leak: float = 1e-5,
    p_loss: float = 1e-7,
    depth: typing.Optional[float] = None,
    p_log: typing.Optional[float] = None,
    r: typing.Optional[int] = None,
) -> InjectionModel:
    """Round count, injected fault rate and retry probability.

    ``q_Y = (8/15 + 7r/15) p + (r+1) D p / 150`` for an SEC of ``D``
    POC. An injection is retried unless all ``r`` cat measurements agree
    and no ancilla loss or leak was flagged.
    """
    depth = PUBLISHED_BUDGETS[code] if depth is None else depth
    p_log = HOST_LOGICAL_RATES.get(code, 0.0) if p_log is None else p_log
    if r is None:
        r = round_count(w_inj, p, p_log)
    pf = C1 * w_inj * p
    q_y = (8 / 15 + 7 * r / 15) * p + (r + 1) * depth * p / 150
    p_anc = min(1.0, (r + 1) * depth * (p_loss + p_leak))
    p_retry = 1.0 - ((1 - pf) ** r + pf**r) * (1 - p_anc)
    model = InjectionModel(code, w_inj, r, q_y, p_retry, pf, p_anc, depth)
    log.debug("injection %s w=%d: r=%d q_Y=%.4g p_retry=%.4g", code, w_inj, r, q_y, p_retry)
    return model


@dataclasses.dataclass(frozen=True)
class FactoryModel:
    kind: str
    host: str
    w_inj: int
    r_inj: int
    q_y: float
    p_retry: float
    a_inj: float
    """All injections of one attempt accepted at the first try."""
    a_ver: float
    """Verification or distillation accepted."""
    p_fail: float
    p_out: float
    """Error rate of an output magic state."""
    n_sec_avg: float
    """Expected SEC per produced pair."""
    width: int
    """Cat weight the factory needs."""

    def time(self, sec_time: float) -> float:
        return self.n_sec_avg * sec_time


def solve_runtime_iteratively(
    s: float, p_fail: float, tol: float = 1e-13, max_iter: int = 100_000
) -> float:
    """Fixed point of ``N = S + p_fail N``."""
    if not 0.0 <= p_fail < 1.0:
        raise ValueError(f"failure probability must lie in [0, 1), got {p_fail}")
    n = s
    for _ in range(max_iter):
        nxt = s + p_fail * n
        if abs(nxt - n) <= tol * max(1.0, abs(nxt)):
            return nxt
        n = nxt
    raise WalkingCatError("runtime recursion did not converge")


# CH2

CH2_WIDTH = 54
CH2_HOST = "Q54"
CH2_W_INJ = 16
CH2_FIRST = 4
"""SEC before the first injection can be retried."""
CH2_SECOND = 7


def ch2_model(inj: typing.Optional[InjectionModel] = None, tau: typing.Optional[float] = None) -> FactoryModel:
    """Two injections followed by a transversal ``H̄⊗²`` check.

    The check accepts both states faulty or both clean, so the output
    fails with ``q²/((1-q)² + q²)``.
    """
    inj = inj or injection_model(CH2_HOST, CH2_W_INJ)
    if tau is None:
        tau = viterbi_duration(MeasureParams(w=CH2_WIDTH))
    q = inj.q_y
    a_acc = 1.0 - inj.p_retry
    a_ver = (1 - q) ** 2 + q**2
    a_inj = a_acc**2
    check = 1 + 2 * inj.r + tau
    s = inj.p_retry * CH2_FIRST + a_acc * inj.p_retry * CH2_SECOND + a_inj * check
    success = a_inj * a_ver
    return FactoryModel(
        kind="CH2",
        host=inj.code,
        w_inj=inj.w_inj,
        r_inj=inj.r,
        q_y=q,
        p_retry=inj.p_retry,
        a_inj=a_inj,
        a_ver=a_ver,
        p_fail=1.0 - success,
        p_out=q**2 / a_ver,
        n_sec_avg=s / success,
        width=CH2_WIDTH,
    )


# MEK

MEK_WIDTH = 18
MEK_HOST = "Q70"
MEK_W_INJ = 18
MEK_INPUTS = 10
MEK_WIDTH_VERIFY = 20
"""Weight of the verification measurements, for the Viterbi duration."""

MEK_ACCEPT = (1, -10, 58, -192, 400, -544, 480, -256, 64)
MEK_ONE_OUTPUT = (0, 0, 9, -56, 160, -256, 240, -128, 32)
MEK_ANY_OUTPUT = (0, 0, 13, -80, 228, -368, 352, -192, 48)

MEK_FAULT_SIGNATURES: tuple[tuple[int, int, int, int], ...] = (
    (1, 1, 1, 0),
    (1, 1, 0, 1),
    (1, 0, 1, 0),
    (1, 0, 0, 1),
    (1, 0, 1, 1),
    (1, 0, 0, 0),
    (0, 1, 1, 0),
    (0, 1, 0, 1),
    (0, 1, 1, 1),
    (0, 1, 0, 0),
)
"""Effect of a ``Ȳ`` fault on each input as ``(check 1, check 2, output 1, output 2)``.

The first two inputs feed the outputs, the others only the distillation
checks. A pattern is accepted when both check parities are even.
"""


def mek_polynomials(q: float) -> tuple[float, float, float]:
    """``(a, u, u₂)`` from the published coefficient vectors."""
    return (
        float(P.polyval(q, MEK_ACCEPT)),
        float(P.polyval(q, MEK_ONE_OUTPUT)),
        float(P.polyval(q, MEK_ANY_OUTPUT)),
    )


@functools.lru_cache(maxsize=1)
def _mek_counts() -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    """Accepted patterns by fault count: all, output 1 flipped, any output flipped."""
    sig = np.array(MEK_FAULT_SIGNATURES, dtype=np.uint8)
    accept = [0] * (MEK_INPUTS + 1)
    one = [0] * (MEK_INPUTS + 1)
    anyo = [0] * (MEK_INPUTS + 1)
    for bits in itertools.product((0, 1), repeat=MEK_INPUTS):
        mask = np.array(bits, dtype=np.bool_)
        c1, c2, o1, o2 = np.bitwise_xor.reduce(sig[mask], axis=0) if mask.any() else (0, 0, 0, 0)
        if c1 or c2:
            continue
        k = int(mask.sum())
        accept[k] += 1
        one[k] += int(o1)
        anyo[k] += int(o1 or o2)
    return tuple(accept), tuple(one), tuple(anyo)


def mek_oracle(q: float) -> tuple[float, float, float]:
    """``(a, u, u₂)`` by summing over all 1024 input fault patterns."""
    weights = [q**k * (1 - q) ** (MEK_INPUTS - k) for k in range(MEK_INPUTS + 1)]
    return tuple(  # type: ignore[return-value]
        float(sum(n * wk for n, wk in zip(counts, weights))) for counts in _mek_counts()
    )


def _expand(counts: typing.Sequence[int]) -> list[int]:
    coeffs = [0] * (MEK_INPUTS + 1)
    for k, n in enumerate(counts):
        rest = MEK_INPUTS - k
        for j in range(rest + 1):
            coeffs[k + j] += n * math.comb(rest, j) * (-1) ** j
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def mek_oracle_coefficients() -> tuple[list[int], list[int], list[int]]:
    """Exact integer coefficients of ``a``, ``u`` and ``u₂`` in ``q``."""
    a, u, u2 = _mek_counts()
    return _expand(a), _expand(u), _expand(u2)


def mek_model(inj: typing.Optional[InjectionModel] = None, tau: typing.Optional[float] = None) -> FactoryModel:
    """Ten injections followed by distillation with postselection.

    Outcomes where exactly one output is flagged are discarded, so the
    factory accepts with ``a - 2(u₂ - u)`` and outputs a faulty pair with
    ``(2u - u₂)/a_ver``.
    """
    inj = inj or injection_model(MEK_HOST, MEK_W_INJ)
    if tau is None:
        tau = viterbi_duration(MeasureParams(w=MEK_WIDTH_VERIFY))
    q = inj.q_y
    a, u, u2 = mek_polynomials(q)
    a_ver = a - 2 * (u2 - u)
    a_acc = 1.0 - inj.p_retry
    a_inj = a_acc**MEK_INPUTS
    step = inj.r
    check = MEK_INPUTS * step + 3 * tau
    retries = sum(a_acc ** (j - 1) * j * step for j in range(1, MEK_INPUTS + 1))
    s = inj.p_retry * retries + a_inj * check
    success = a_inj * a_ver
    return FactoryModel(
        kind="MEK",
        host=inj.code,
        w_inj=inj.w_inj,
        r_inj=inj.r,
        q_y=q,
        p_retry=inj.p_retry,
        a_inj=a_inj,
        a_ver=a_ver,
        p_fail=1.0 - success,
        p_out=(2 * u - u2) / a_ver,
        n_sec_avg=s / success,
        width=MEK_WIDTH,
    )


FACTORIES: dict[str, typing.Callable[..., FactoryModel]] = {"CH2": ch2_model, "MEK": mek_model}


def factory_model(kind: str, **kwargs: typing.Any) -> FactoryModel:
    try:
        build = FACTORIES[kind.upper()]
    except KeyError:
        raise WalkingCatError(f"unknown magic factory {kind!r}, choose CH2 or MEK") from None
    return build(**kwargs)


def output_error_curve(kind: str, qs: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Output error rate against the injected fault rate, with ideal retries."""
    out = []
    for q in np.asarray(qs, dtype=np.float64):
        if kind.upper() == "CH2":
            out.append(q**2 / ((1 - q) ** 2 + q**2))
        else:
            a, u, u2 = mek_polynomials(float(q))
            out.append((2 * u - u2) / (a - 2 * (u2 - u)))
    return np.asarray(out)
