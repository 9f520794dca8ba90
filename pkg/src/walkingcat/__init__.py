from __future__ import annotations

import argparse
import dataclasses
import functools
import importlib
import io
import json
import logging
import os
import sys
import traceback
import typing
from importlib import metadata

import typing_extensions

try:
    __version__: str = metadata.version("walkingcat")
except metadata.PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"


# error.py

"""Exceptions with special meanings for walkingcat."""


class WalkingCatError(RuntimeError):
    """Abort the current computation.

    Raising this exception inside a function decorated with
    :func:`guarded` prints ``ERROR: <message>`` and exits with the data
    error status 3.
    """

    pass


class PolynomialSyntaxError(WalkingCatError):
    """A monomial polynomial could not be parsed.

    The message always quotes the offending term.
    """

    def __init__(self, term: str, spec: str) -> None:
        super().__init__(f"invalid monomial term {term!r} in polynomial {spec!r}")
        self.term = term
        self.spec = spec


class CodeConstructionError(WalkingCatError):
    """The parameters do not describe a valid three-ring code."""


class ScheduleError(WalkingCatError):
    """A schedule permutation is malformed for the given code."""


class BudgetExceeded(WalkingCatError):
    """An exhaustive search would exceed its configured budget."""


class CircuitError(WalkingCatError):
    """A circuit is malformed or lacks detector annotations."""


class StreamError(WalkingCatError):
    """A detector stream does not fit the declared window layout."""


class Timeout(WalkingCatError):
    """Maximum run time exceeded."""


# multiarg.py


class MultiArg:
    """
    Comma separated command line values, usable as an argparse ``type``.

    .. code-block:: python

        parser.add_argument(
            "--window",
            metavar="W,C",
            type=walkingcat.MultiArg,
            default="5,3",
        )

    :param args: The list of argument strings or the raw string to split.
    :param fill: Value returned for indices beyond the end. Without a fill
        value the last element is repeated.
    :param splitchar: The separator.
    """

    args: list[str]

    fill: typing.Optional[str]

    def __init__(
        self,
        args: typing.Union[list[str], str],
        fill: typing.Optional[str] = None,
        splitchar: str = ",",
    ) -> None:
        if isinstance(args, list):
            self.args = args
        else:
            self.args = [a.strip() for a in args.split(splitchar) if a.strip()]
        self.fill = fill

    def __len__(self) -> int:
        return len(self.args)

    def __iter__(self) -> typing.Iterator[str]:
        return iter(self.args)

    def __getitem__(self, key: int) -> typing.Optional[str]:
        if -len(self.args) <= key < len(self.args):
            return self.args[key]
        if self.fill is not None:
            return self.fill
        return self.args[-1] if self.args else None

    def ints(self) -> list[int]:
        """Convert every element to :class:`int`.

        :raises WalkingCatError: if an element is not an integer.
        """
        try:
            return [int(a) for a in self.args]
        except ValueError as exc:
            raise WalkingCatError(f"expected integers, got {','.join(self.args)!r}") from exc

    def floats(self) -> list[float]:
        try:
            return [float(a) for a in self.args]
        except ValueError as exc:
            raise WalkingCatError(f"expected numbers, got {','.join(self.args)!r}") from exc


# settings.py


@dataclasses.dataclass(frozen=True)
class Settings:
    """Process wide knobs read from the environment."""

    threads: int = 1
    """Upper bound on worker threads (``WCK_THREADS``)."""

    @classmethod
    def from_env(
        cls, environ: typing.Optional[typing.Mapping[str, str]] = None
    ) -> typing_extensions.Self:
        """Read ``WCK_THREADS``; the default is the CPU count.

        :raises WalkingCatError: if the variable is not a positive integer.
        """
        env = os.environ if environ is None else environ
        raw = env.get("WCK_THREADS")
        if raw is None or raw.strip() == "":
            return cls(threads=os.cpu_count() or 1)
        try:
            threads = int(raw)
        except ValueError as exc:
            raise WalkingCatError(f"WCK_THREADS must be an integer, got {raw!r}") from exc
        if threads < 1:
            raise WalkingCatError(f"WCK_THREADS must be positive, got {threads}")
        return cls(threads=threads)


# platform.py


def _with_timeout(
    time: int, func: typing.Callable[..., R], *args: typing.Any, **kwargs: typing.Any
) -> R:
    """Call `func` but raise :class:`Timeout` after `time` seconds."""

    if os.name != "posix":
        return func(*args, **kwargs)

    signal = importlib.import_module("signal")

    def timeout_handler(signum: int, frame: typing.Any) -> typing.NoReturn:
        raise Timeout(f"computation aborted after {time}s")

    previous = signal.signal(signal.SIGALRM, timeout_handler)
    signal.alarm(time)
    try:
        return func(*args, **kwargs)
    finally:
        signal.alarm(0)
        signal.signal(signal.SIGALRM, previous)


# runtime.py

"""Process runtime: logging set-up, exception handling and output.

Command line entry points are decorated with :func:`guarded`. Library
code never touches the runtime; it logs to ``walkingcat.<module>``
loggers and raises :class:`WalkingCatError` subclasses.
"""

P = typing.ParamSpec("P")
R = typing.TypeVar("R")


def guarded(
    original_function: typing.Any = None, verbose: typing.Any = None
) -> typing.Any:
    """Run a function inside the walkingcat runtime.

    Uncaught exceptions are turned into a one line ``ERROR:`` diagnostic
    on stderr and exit status 3. Tracebacks are added for unexpected
    exceptions when the verbosity is at least 1.

    :param verbose: Optional keyword parameter to set the verbosity
        before the decorated function parses its arguments.
    """

    def _decorate(func: typing.Callable[P, R]):
        @functools.wraps(func)
        def wrapper(*args: typing.Any, **kwds: typing.Any):
            runtime = _Runtime()
            if verbose is not None:
                runtime.verbose = verbose
            try:
                return func(*args, **kwds)
            except (WalkingCatError, ValueError) as exc:
                runtime._handle_exception(f"{type(exc).__name__}: {exc}", expected=True)
            except Exception:
                runtime._handle_exception()

        return wrapper

    if original_function is not None:
        assert callable(original_function), (
            f'Function {original_function!r} not callable. Forgot to add "verbose=" keyword?'
        )
        return _decorate(original_function)
    return _decorate  # type: ignore


class _AnsiColorFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        no_style = "\033[0m"
        start_style = {
            "DEBUG": "\033[90m",
            "INFO": "\033[34m",
            "WARNING": "\033[93m",
            "ERROR": "\033[31m",
            "CRITICAL": "\033[91m",
        }.get(record.levelname, no_style)
        return f"{start_style}{super().format(record)}{no_style}"


class _StderrHandler(logging.StreamHandler):  # type: ignore[type-arg]
    """Stream handler that resolves ``sys.stderr`` at emit time."""

    def __init__(self) -> None:
        super().__init__(sys.stderr)

    @property  # type: ignore[override]
    def stream(self) -> typing.Any:
        return sys.stderr

    @stream.setter
    def stream(self, value: typing.Any) -> None:
        pass


class _Runtime:
    instance: typing.Optional[typing_extensions.Self] = None  # type: ignore
    _verbose = 0
    _colorize: bool = False
    timeout: typing.Optional[int] = None
    logchan: logging.Handler
    stdout: typing.Optional[io.StringIO] = None
    stderr: typing.Optional[io.StringIO] = None
    exitcode: int = 0

    def __new__(cls) -> typing_extensions.Self:
        if not cls.instance:
            cls.instance = super(_Runtime, cls).__new__(cls)
            cls.instance._initialized = False
        return cls.instance

    def __init__(self) -> None:
        if getattr(self, "_initialized", False):
            return
        rootlogger = logging.getLogger("walkingcat")
        rootlogger.setLevel(logging.DEBUG)
        for handler in list(rootlogger.handlers):
            if isinstance(handler, _StderrHandler):
                rootlogger.removeHandler(handler)
        self.logchan = _StderrHandler()
        self.logchan.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        self.logchan.setLevel(logging.WARNING)
        rootlogger.addHandler(self.logchan)
        self._initialized = True

    def _handle_exception(
        self, statusline: typing.Optional[str] = None, expected: bool = False
    ) -> typing.NoReturn:
        exc_type, value = sys.exc_info()[0:2]
        message = statusline or traceback.format_exception_only(exc_type, value)[0].strip()
        err = self.stderr if self.stderr is not None else sys.stderr
        print(f"ERROR: {message}", file=err)
        if not expected and self.verbose > 0:
            print(traceback.format_exc(), end="", file=err)
        self.exitcode = 3
        self.sysexit()

    @property
    def verbose(self) -> int:
        return self._verbose

    @verbose.setter
    def verbose(self, verbose: typing.Any) -> None:
        if isinstance(verbose, int):
            self._verbose = verbose
        elif isinstance(verbose, float):
            self._verbose = int(verbose)
        else:
            self._verbose = len(verbose or [])
        if self._verbose >= 3:
            self.logchan.setLevel(logging.DEBUG)
            self._verbose = 3
        elif self._verbose == 2:
            self.logchan.setLevel(logging.INFO)
        else:
            self.logchan.setLevel(logging.WARNING)

    @property
    def colorize(self) -> bool:
        return self._colorize

    @colorize.setter
    def colorize(self, colorize: bool) -> None:
        self._colorize = colorize
        fmt = "%(levelname)s %(name)s: %(message)s"
        if colorize:
            self.logchan.setFormatter(_AnsiColorFormatter(fmt))
        else:
            self.logchan.setFormatter(logging.Formatter(fmt))

    def emit(self, text: str) -> None:
        """Write one record of command output to stdout."""
        out = self.stdout if self.stdout is not None else sys.stdout
        print(text, file=out)

    def emit_json(self, payload: typing.Any) -> None:
        self.emit(json.dumps(payload, sort_keys=True, default=_json_default))

    def execute(
        self,
        func: typing.Callable[[], R],
        verbose: typing.Any = None,
        timeout: typing.Any = None,
        colorize: bool = False,
    ) -> typing.NoReturn:
        """Run a command body and exit with its status."""
        if verbose is not None:
            self.verbose = verbose
        if timeout is not None:
            self.timeout = int(timeout)
        if colorize:
            self.colorize = True
        if self.timeout:
            _with_timeout(self.timeout, func)
        else:
            func()
        self.exitcode = 0
        self.sysexit()

    def sysexit(self) -> typing.NoReturn:
        sys.exit(self.exitcode)


def _json_default(obj: typing.Any) -> typing.Any:
    """Make numpy scalars, arrays and dataclasses JSON serialisable."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return dataclasses.asdict(obj)
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


# cli.py (argparse)


def setup_argparser(
    name: typing.Optional[str],
    version: typing.Optional[str] = None,
    license: typing.Optional[str] = None,
    repository: typing.Optional[str] = None,
    copyright: typing.Optional[str] = None,
    description: typing.Optional[str] = None,
    epilog: typing.Optional[str] = None,
    verbose: bool = False,
) -> argparse.ArgumentParser:
    """
    Set up an argument parser with the project metadata in its
    description.

    :param name: The program name.
    :param version: Included in the description and exposed by ``-V``,
        ``--version``.
    :param license: The license name, included in the description.
    :param repository: The repository URL, included in the description.
    :param copyright: The copyright line.
    :param description: Free text appended after a blank line.
    :param epilog: Text shown after the option listing.
    :param verbose: Provide a repeatable ``-v``, ``--verbose`` option.

    :returns: An ArgumentParser with RawDescriptionHelpFormatter at 80
        columns.
    """
    description_lines: list[str] = []

    if version is not None:
        description_lines.append(f"version {version}")

    if license is not None:
        description_lines.append(f"Licensed under the {license}.")

    if repository is not None:
        description_lines.append(f"Repository: {repository}.")

    if copyright is not None:
        description_lines.append(copyright)

    if description is not None:
        description_lines.append("")
        description_lines.append(description)

    parser = argparse.ArgumentParser(
        prog=name,
        formatter_class=lambda prog: argparse.RawDescriptionHelpFormatter(
            prog, width=80
        ),
        description="\n".join(description_lines),
        epilog=epilog,
    )

    if version is not None:
        parser.add_argument(
            "-V",
            "--version",
            action="version",
            version=f"%(prog)s {version}",
        )

    if verbose:
        parser.add_argument(
            "-v",
            "--verbose",
            action="count",
            default=0,
            help="Increase the output verbosity (-vv info, -vvv debug).",
        )

    return parser


__all__ = [
    "BudgetExceeded",
    "CircuitError",
    "CodeConstructionError",
    "MultiArg",
    "PolynomialSyntaxError",
    "ScheduleError",
    "Settings",
    "StreamError",
    "Timeout",
    "WalkingCatError",
    "guarded",
    "setup_argparser",
]
