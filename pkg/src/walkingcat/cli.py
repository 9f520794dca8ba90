"""The ``walkingcat`` command line.

Every subcommand prints one JSON document on stdout. ``--out PATH``
additionally writes the tabular part of the result as CSV (circuits as
text). Logging goes to stderr; ``-vv`` shows progress, ``-vvv`` details.
"""

from __future__ import annotations

import argparse
import dataclasses
import functools
import logging
import pathlib
import typing

import numpy as np
import pandas

from walkingcat import (
    MultiArg,
    ScheduleError,
    WalkingCatError,
    _Runtime,
    __version__,
    guarded,
    setup_argparser,
)
from walkingcat import catbell, codes, estimator, logical, magic, measure, reservoir, schedule, simkit, streamdec

log = logging.getLogger("walkingcat.cli")

Rows = list[dict[str, typing.Any]]


@dataclasses.dataclass
class Report:
    """What a subcommand hands back for output."""

    data: typing.Any
    rows: typing.Optional[Rows] = None
    text: typing.Optional[str] = None


def _write(report: Report, out: typing.Optional[str]) -> None:
    if out is None:
        return
    path = pathlib.Path(out)
    if report.text is not None:
        path.write_text(report.text, encoding="utf-8")
    elif report.rows is not None:
        pandas.DataFrame(report.rows).to_csv(path, index=False)
    else:
        raise WalkingCatError("this command has no tabular output for --out")
    log.info("wrote %s", path)


# shared argument helpers


def _code_from_args(args: argparse.Namespace) -> codes.ThreeRingCode:
    if getattr(args, "family", None):
        if args.l is None or args.m is None or args.A is None or args.B is None:
            raise WalkingCatError("--family needs --l, --m, --A and --B")
        return codes.construct(args.family, args.l, args.m, args.A, args.B)
    if not args.code:
        raise WalkingCatError("name a code or give --family, --l, --m, --A and --B")
    return codes.get_code(args.code)


def _add_code_args(parser: argparse.ArgumentParser, positional: bool = True) -> None:
    if positional:
        parser.add_argument("code", nargs="?", help="Name (Q70) or parameters ([[70,6,9]]).")
    else:
        parser.add_argument("--code", help="Name (Q70) or parameters ([[70,6,9]]).")
    parser.add_argument("--family", choices=[f.value for f in codes.Family])
    parser.add_argument("--l", type=int)
    parser.add_argument("--m", type=int)
    parser.add_argument("--A", help='Monomials of A, e.g. "y2,x2,x3,x4".')
    parser.add_argument("--B", help='Monomials of B, e.g. "y,x,x3".')


def _schedule_for(code: codes.ThreeRingCode, text: typing.Optional[str]) -> schedule.Schedule:
    if text:
        return schedule.parse_schedule(text)
    if code.name in schedule.PUBLISHED_SCHEDULES:
        return schedule.published_schedule(code.name)
    found = schedule.find_deterministic_schedule(code)
    if found is None:
        raise ScheduleError(f"no deterministic schedule found for {code!r}, pass --schedule")
    return found


def _noise(args: argparse.Namespace) -> simkit.NoiseParams:
    return simkit.NoiseParams(p=args.p, p_loss=args.p_loss, p_leak=args.p_leak)


def _add_noise_args(parser: argparse.ArgumentParser, p: float) -> None:
    parser.add_argument("--p", type=float, default=p, help="Two-qubit error rate.")
    parser.add_argument("--p-loss", type=float, default=0.0)
    parser.add_argument("--p-leak", type=float, default=0.0)


# code


def cmd_code_info(args: argparse.Namespace) -> Report:
    code = _code_from_args(args)
    data = codes.info(code)
    if args.distance != "none":
        result = codes.distance(code, mode=args.distance, iters=args.iters, seed=args.seed)
        data["d"] = result.d
        data["d_exact"] = not result.is_upper_bound
        data["d_x"], data["d_z"] = result.dx, result.dz
    return Report(data)


def cmd_code_list(args: argparse.Namespace) -> Report:
    rows = [
        {
            "name": rec.name,
            "family": rec.family.value,
            "l": rec.ell,
            "m": rec.m,
            "A": rec.a_terms,
            "B": rec.b_terms,
            "n": rec.n,
            "k": rec.k,
            "d": rec.d,
            "d_exact": rec.d_exact,
        }
        for rec in codes.load_database()
        if args.family is None or rec.family.value == args.family
    ]
    return Report({"codes": rows}, rows=rows)


# schedule


def cmd_schedule_compile(args: argparse.Namespace) -> Report:
    code = _code_from_args(args)
    sched = _schedule_for(code, args.schedule)
    if args.rounds:
        circuit = schedule.memory_experiment(code, sched, args.rounds, args.augment, args.basis)
        budget = schedule.budget_of(circuit)
    else:
        sec = schedule.compile_sec(code, sched, args.augment)
        circuit, budget = sec.circuit, sec.budget
    cost = schedule.transport_cost(circuit)
    data = {
        "code": repr(code),
        "schedule": sched.format(),
        "augment": args.augment,
        "poc": budget.total,
        "budget": dataclasses.asdict(budget),
        "shift_steps": cost.steps,
        "qubits": circuit.num_qubits,
        "detectors": len(circuit.detectors),
        "observables": len(circuit.observables),
        "deterministic": schedule.schedule_is_deterministic(code, sched),
    }
    published = schedule.PUBLISHED_BUDGETS.get(code.name or "")
    if published is not None:
        data["published_poc"] = published
    return Report(data, text=circuit.to_text())


def cmd_schedule_check(args: argparse.Namespace) -> Report:
    code = _code_from_args(args)
    sched = _schedule_for(code, args.schedule)
    return Report(
        {
            "schedule": sched.format(),
            "valid": schedule.validate_schedule(code, sched),
            "deterministic": schedule.schedule_is_deterministic(code, sched),
        }
    )


# sim


def cmd_sim_memory(args: argparse.Namespace) -> Report:
    code = _code_from_args(args)
    sched = _schedule_for(code, args.schedule)
    circuit = schedule.memory_experiment(code, sched, args.rounds, args.augment, args.basis)
    result = simkit.sample(circuit, _noise(args), args.shots, args.seed)
    per_detector = result.detectors.mean(axis=0) if result.shots else np.zeros(0)
    data = {
        "code": repr(code),
        "rounds": args.rounds,
        "shots": result.shots,
        "detection_rate": float(per_detector.mean()) if per_detector.size else 0.0,
        "raw_observable_flip_rate": result.logical_error_rate(),
        "mean_lost": float(result.lost.mean()) if result.shots else 0.0,
        "mean_leaked": float(result.leaked.mean()) if result.shots else 0.0,
        "beacon_flags": int(result.beacon_flags.sum()),
    }
    if args.out:
        result.write(args.out)
        args.out = None
    return Report(data)


def cmd_sim_loss(args: argparse.Namespace) -> Report:
    if args.published:
        dist = simkit.published_loss_distribution((args.code or "").upper())
        source = "published"
    else:
        code = _code_from_args(args)
        sec = schedule.compile_sec(code, _schedule_for(code, args.schedule), "beacon+LDU")
        dist = simkit.sec_loss_distribution(sec, code.n, args.p_loss)
        source = "compound Poisson"
    rows = [{"lost": j, "probability": float(p)} for j, p in enumerate(dist.pmf)]
    if dist.tail:
        rows.append({"lost": f">{len(dist.pmf) - 1}", "probability": dist.tail})
    data = {
        "source": source,
        "mean": dist.mean,
        "reload_probability": dist.reload_probability,
        "pmf": rows,
    }
    return Report(data, rows=rows)


# decode


def cmd_decode_stream(args: argparse.Namespace) -> Report:
    code = _code_from_args(args)
    window = streamdec.WindowConfig(*args.window.ints()[:2])
    sched = _schedule_for(code, args.schedule)
    noise = _noise(args)
    circuit = schedule.memory_experiment(code, sched, args.rounds, "none", args.basis)
    model = streamdec.build_staircase(circuit, noise)
    r = args.rounds + 1
    samples = simkit.sample(circuit, noise, args.shots, args.seed)
    order = streamdec.detector_order(circuit)
    decoder = streamdec.StreamingDecoder(model, window, r)
    rows: Rows = []
    per_sec: list[np.ndarray] = []
    reaction: list[float] = []
    failures = global_failures = 0
    for shot in range(samples.shots):
        stream = samples.detectors[shot, order]
        truth = samples.observables[shot].astype(np.uint8)
        result = decoder.decode(stream)
        failures += int(np.any(result.observables != truth))
        if args.compare_global:
            whole = streamdec.global_decode(model, stream, r)
            global_failures += int(np.any(whole.observables != truth))
        per_sec.append(result.trace.per_sec_us())
        reaction.append(result.trace.reaction_us)
        for idx, us, weight in result.trace.rows():
            rows.append({"shot": shot, "window": idx, "decode_us": us, "committed_weight": weight})
    times = np.concatenate(per_sec) if per_sec else np.zeros(0)
    n_win, w_last = streamdec.window_plan(r, window.w, window.c)
    data: dict[str, typing.Any] = {
        "code": repr(code),
        "window": [window.w, window.c],
        "rounds": r,
        "windows": n_win,
        "w_last": w_last,
        "shots": samples.shots,
        "logical_error_rate": failures / samples.shots if samples.shots else 0.0,
        "mean_us": float(times.mean()) if times.size else 0.0,
        "p99_us": float(np.percentile(times, 99)) if times.size else 0.0,
        "p999_us": float(np.percentile(times, 99.9)) if times.size else 0.0,
        "reaction_us": float(np.mean(reaction)) if reaction else 0.0,
    }
    if args.compare_global:
        data["global_logical_error_rate"] = global_failures / samples.shots if samples.shots else 0.0
    return Report(data, rows=rows)


def cmd_decode_plan(args: argparse.Namespace) -> Report:
    w, c = args.window.ints()[:2]
    n_win, w_last = streamdec.window_plan(args.rounds, w, c)
    return Report({"rounds": args.rounds, "window": [w, c], "windows": n_win, "w_last": w_last})


# cat


def cmd_cat_model(args: argparse.Namespace) -> Report:
    spec = catbell.CatSpec(w=args.w, m=args.rounds, eps=args.eps, p=args.p, p_leak=args.p_leak, p_loss=args.p_loss)
    model = catbell.cat_model(spec)
    data = model.as_dict()
    data["stitch_rounds"] = catbell.stitch_model(args.eps, args.p).m
    data["bell"] = dataclasses.asdict(catbell.bell_model())
    return Report(data)


def cmd_cat_sim(args: argparse.Namespace) -> Report:
    m = args.rounds if args.rounds is not None else catbell.required_rounds(1e-10, 1e-4)
    result = catbell.cat_sim(args.w, m, _noise(args), args.shots, args.seed)
    data = {
        "w": result.w,
        "m": result.m,
        "shots": result.shots,
        "acceptance": result.acceptance,
        "rejection": result.rejection,
        "rejection_bound": min(1.0, (2 * m + 1) * args.w * args.p),
        "rejected_detection": result.rejected_detection,
        "rejected_loss": result.rejected_loss,
        "rejected_leak": result.rejected_leak,
        "z_rate": result.z_rate,
        "x_weights": result.x_weights,
    }
    return Report(data, rows=result.rows())


# measure


def cmd_measure_viterbi(args: argparse.Namespace) -> Report:
    params = measure.MeasureParams(w=args.w, p=args.p, eps=args.eps, p_log=args.p_log)
    dist = measure.viterbi_distribution(params)
    data = {
        "w": args.w,
        "eps": args.eps,
        "p": args.p,
        "margin": dist.margin,
        "expected_sec": round(dist.expected, 4),
        "closed_form_sec": round(dist.closed_form(params), 4),
        "wrong": dist.wrong,
        "quantiles": dist.quantiles(),
        "edm_sec": measure.edm_duration(params),
    }
    if args.mc_shots:
        data["monte_carlo_sec"] = float(measure.viterbi_monte_carlo(params, args.mc_shots, args.seed).mean())
    rows = [{"sec": t, "probability": float(q)} for t, q in enumerate(dist.pmf) if q > 0]
    return Report(data, rows=rows)


def cmd_measure_table(args: argparse.Namespace) -> Report:
    rows = measure.lmtime_rows(args.p)
    flat = [{**row, "published": list(row["published"])} for row in rows]
    return Report({"rows": flat}, rows=rows)


# magic


def cmd_magic_model(args: argparse.Namespace) -> Report:
    model = magic.factory_model(args.kind)
    data = dataclasses.asdict(model)
    data["fail_percent"] = round(100 * model.p_fail, 2)
    data["lt_seconds"] = model.time(schedule.PUBLISHED_BUDGETS[model.host] * estimator.POC_TIME)
    return Report(data)


# reservoir


def _counts(args: argparse.Namespace) -> reservoir.ComponentCounts:
    if args.config:
        return reservoir.ComponentCounts.parse(args.config)
    return reservoir.ComponentCounts(args.M, args.T, args.C, args.B)


def cmd_reservoir_size(args: argparse.Namespace) -> Report:
    counts = _counts(args)
    zones = range(1, args.max_zones + 1)
    curve, point = reservoir.size_reservoir(counts, zones=zones, r_max=args.r_max)
    rows = [{"L": pt.loading_zones, "R": pt.capacity} for pt in curve]
    data = {
        "allocation": dataclasses.asdict(counts),
        "L": point.loading_zones if point else None,
        "R": point.capacity if point else None,
    }
    if not args.quiet_curve:
        data["curve"] = rows
    return Report(data, rows=rows)


def cmd_reservoir_failure(args: argparse.Namespace) -> Report:
    counts = _counts(args)
    losses = reservoir.aggregate_losses(reservoir.default_components(counts))
    chain = reservoir.ReservoirChain(args.R, args.L, losses)
    mixing = chain.mixing_curve(args.steps)
    below = np.flatnonzero(mixing < 0.01)
    data = {
        "L": args.L,
        "R": args.R,
        "mean_loss": losses.mean,
        "failure": chain.failure,
        "mixing_sec": int(below[0]) if below.size else None,
    }
    rows = [{"sec": t, "distance": float(v)} for t, v in enumerate(mixing)]
    return Report(data, rows=rows)


# estimate


def cmd_estimate(args: argparse.Namespace) -> Report:
    if args.tradeoff is not None:
        n_t = args.tradeoff
        rows = []
        for m in range(n_t + 1):
            qubits, per_day = estimator.single_code_tradeoff(n_t, m)
            rows.append({"memory_blocks": m, "logical_qubits": qubits, "t_per_day": per_day})
        return Report({"blocks": n_t, "tradeoff": rows}, rows=rows)
    estimates = [estimator.estimate(text) for text in args.config]
    rows = []
    for est in estimates:
        rows.append(
            {
                "config": str(est.config),
                "logical_qubits": est.logical_qubits,
                "t_per_day": est.t_per_day,
                **est.allocation.as_dict(),
            }
        )
    data = [est.as_dict() for est in estimates]
    return Report(data[0] if len(data) == 1 else data, rows=rows)


# logical


def cmd_logical_reduce(args: argparse.Namespace) -> Report:
    code = _code_from_args(args)
    reduced = logical.tabu_reduce_basis(
        code.basis,
        code,
        steps=args.steps,
        preserve_self_similarity=args.self_similar,
        seed=args.seed,
    )
    rows = logical.format_basis(code, reduced.basis)
    return Report(
        {"code": repr(code), "max_weight": reduced.max_weight, "weights": reduced.weights, "basis": rows},
        rows=rows,
    )


def cmd_logical_width(args: argparse.Namespace) -> Report:
    code = _code_from_args(args)
    table = logical.accessible_set(code, code.basis, args.width, seed=args.seed)
    rows = [{"logical": key, "weight": rep.weight} for key, rep in table.table.items()]
    return Report(
        {"code": repr(code), "logical_width": args.width, "operators": len(table), "block_width": table.block_width},
        rows=rows,
    )


def cmd_logical_order(args: argparse.Namespace) -> Report:
    code = _code_from_args(args)
    shift = tuple(args.shift.ints())
    if len(shift) != 3:
        raise WalkingCatError("--shift needs three integers a,b,c")
    action = logical.cyclic_gate_action(code, code.basis, typing.cast(tuple[int, int, int], shift))
    return Report({"code": repr(code), "shift": list(shift), "order": logical.logical_order(action)})


# parser


def build_parser() -> argparse.ArgumentParser:
    parser = setup_argparser(
        "walkingcat",
        version=__version__,
        license="ZPL-2.1",
        description="Codes, circuits, decoders and resource models of a walking cat architecture.",
        verbose=True,
    )
    parser.add_argument("--color", action="store_true", help="Colour log messages.")
    parser.add_argument("-t", "--timeout", type=int, default=0, help="Abort after this many seconds (0: never).")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PATH", help="Write the table (or circuit) to PATH.")
    common.add_argument("--seed", type=int, default=0)

    sub = parser.add_subparsers(dest="command", required=True)

    def leaf(group: typing.Any, name: str, handler: typing.Callable[[argparse.Namespace], Report], help: str) -> argparse.ArgumentParser:
        p = group.add_parser(name, parents=[common], help=help)
        p.set_defaults(handler=handler)
        return p

    # code
    code = sub.add_parser("code", help="Three-ring code database.").add_subparsers(dest="action", required=True)
    p = leaf(code, "info", cmd_code_info, "Parameters and structure of one code.")
    _add_code_args(p)
    p.add_argument("--distance", choices=("none", "exact", "randomized"), default="none")
    p.add_argument("--iters", type=int, default=10_000)
    p = leaf(code, "list", cmd_code_list, "All database records.")
    p.add_argument("--family", choices=[f.value for f in codes.Family])

    # schedule
    sched = sub.add_parser("schedule", help="Syndrome extraction circuits.").add_subparsers(dest="action", required=True)
    for name, handler, text in (
        ("compile", cmd_schedule_compile, "Compile one SEC or a memory experiment."),
        ("check", cmd_schedule_check, "Validate a schedule."),
    ):
        p = leaf(sched, name, handler, text)
        _add_code_args(p)
        p.add_argument("--schedule", help='Pairs like "(B1,B4T),(A1,A2T),...".')
        if name == "compile":
            p.add_argument("--augment", choices=schedule.AUGMENTS, default="beacon+LDU")
            p.add_argument("--rounds", type=int, default=0)
            p.add_argument("--basis", choices=("X", "Z"), default="Z")

    # sim
    sim = sub.add_parser("sim", help="Circuit-level Monte Carlo.").add_subparsers(dest="action", required=True)
    p = leaf(sim, "memory", cmd_sim_memory, "Sample a memory experiment.")
    _add_code_args(p)
    _add_noise_args(p, 1e-3)
    p.add_argument("--schedule")
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--augment", choices=schedule.AUGMENTS, default="none")
    p.add_argument("--basis", choices=("X", "Z"), default="Z")
    p = leaf(sim, "loss", cmd_sim_loss, "Per-SEC loss distribution of a memory block.")
    _add_code_args(p)
    p.add_argument("--schedule")
    p.add_argument("--p-loss", type=float, default=1e-7)
    p.add_argument("--published", action="store_true", help="Use the published table of the named code.")

    # decode
    dec = sub.add_parser("decode", help="Sliding-window decoding.").add_subparsers(dest="action", required=True)
    p = leaf(dec, "stream", cmd_decode_stream, "Stream-decode sampled memory experiments.")
    _add_code_args(p, positional=False)
    _add_noise_args(p, 1e-3)
    p.add_argument("--schedule")
    p.add_argument("--window", type=MultiArg, default=MultiArg("5,3"), metavar="W,C")
    p.add_argument("--rounds", type=int, default=10, help="SEC rounds; detector rounds are one more.")
    p.add_argument("--shots", type=int, default=100)
    p.add_argument("--basis", choices=("X", "Z"), default="Z")
    p.add_argument("--compare-global", action="store_true")
    p = leaf(dec, "plan", cmd_decode_plan, "Window count and last window size.")
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--window", type=MultiArg, default=MultiArg("5,3"), metavar="W,C")

    # cat
    cat = sub.add_parser("cat", help="Cat and Bell factories.").add_subparsers(dest="action", required=True)
    p = leaf(cat, "model", cmd_cat_model, "Heuristic cat factory model.")
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--rounds", type=int, help="Verification rounds m; derived from --eps and --p by default.")
    p.add_argument("--eps", type=float, default=1e-10)
    p.add_argument("--p", type=float, default=1e-4)
    p.add_argument("--p-leak", type=float, default=1e-5)
    p.add_argument("--p-loss", type=float, default=1e-7)
    p = leaf(cat, "sim", cmd_cat_sim, "Monte Carlo of cat preparation and verification.")
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--rounds", type=int)
    p.add_argument("--shots", type=int, default=10_000)
    _add_noise_args(p, 1e-3)

    # measure
    meas = sub.add_parser("measure", help="Cat-based logical measurements.").add_subparsers(dest="action", required=True)
    p = leaf(meas, "viterbi", cmd_measure_viterbi, "Expected duration of a Viterbi measurement.")
    p.add_argument("--w", type=float, required=True)
    p.add_argument("--eps", type=float, default=1e-10)
    p.add_argument("--p", type=float, default=1e-4)
    p.add_argument("--p-log", type=float, default=0.0)
    p.add_argument("--mc-shots", type=int, default=0)
    p = leaf(meas, "table", cmd_measure_table, "Recompute the duration table.")
    p.add_argument("--p", type=float, default=1e-4)

    # magic
    mag = sub.add_parser("magic", help="Magic state factories.").add_subparsers(dest="action", required=True)
    p = leaf(mag, "model", cmd_magic_model, "Factory performance model.")
    p.add_argument("--kind", type=str.upper, choices=("CH2", "MEK"), required=True)

    # reservoir
    res = sub.add_parser("reservoir", help="Global qubit reservoir.").add_subparsers(dest="action", required=True)
    for name, handler, text in (
        ("size", cmd_reservoir_size, "L-R curve and operating point."),
        ("curve", cmd_reservoir_size, "L-R curve only."),
        ("failure", cmd_reservoir_failure, "Failure probability and mixing of one reservoir."),
    ):
        p = leaf(res, name, handler, text)
        p.add_argument("--config", help='Component counts "M,T,C,B".')
        p.add_argument("--M", type=int, default=20, help="Memory blocks (Q102).")
        p.add_argument("--T", type=int, default=20, help="Magic factories (Q54).")
        p.add_argument("--C", type=int, default=40, help="Cat factories.")
        p.add_argument("--B", type=int, default=5, help="Bell factories.")
        if name == "failure":
            p.add_argument("--L", type=int, required=True)
            p.add_argument("--R", type=int, required=True)
            p.add_argument("--steps", type=int, default=400)
        else:
            p.add_argument("--max-zones", type=int, default=80)
            p.add_argument("--r-max", type=int, default=reservoir.R_MAX)
            p.set_defaults(quiet_curve=name == "size")

    # estimate
    p = leaf(sub, "estimate", cmd_estimate, "Resource estimate of architecture configurations.")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", type=MultiArg, help='Comma separated, e.g. "17xQ70+3xMEK,5xQ102+1xCH2".')
    group.add_argument("--tradeoff", type=int, metavar="N_T", help="Split N_T Q70 blocks between memory and MEK.")

    # logical
    lg = sub.add_parser("logical", help="Logical operators of a code.").add_subparsers(dest="action", required=True)
    p = leaf(lg, "reduce", cmd_logical_reduce, "Tabu search for a low weight logical basis.")
    _add_code_args(p)
    p.add_argument("--self-similar", action="store_true")
    p.add_argument("--steps", type=int, default=200)
    p = leaf(lg, "width", cmd_logical_width, "Block width of the accessible logical Paulis.")
    _add_code_args(p)
    p.add_argument("--width", type=int, required=True, help="Logical width w.")
    p = leaf(lg, "order", cmd_logical_order, "Order of a cyclic shift as a logical gate.")
    _add_code_args(p)
    p.add_argument("--shift", type=MultiArg, required=True, metavar="A,B,C")

    return parser


def run(args: argparse.Namespace) -> None:
    report: Report = args.handler(args)
    runtime = _Runtime()
    runtime.emit_json(report.data)
    _write(report, getattr(args, "out", None))


@guarded
def main(argv: typing.Optional[typing.Sequence[str]] = None) -> None:
    args = build_parser().parse_args(argv)
    _Runtime().execute(functools.partial(run, args), verbose=args.verbose, timeout=args.timeout, colorize=args.color)


if __name__ == "__main__":
    main()
