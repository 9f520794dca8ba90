import io
import sys
import typing
from contextlib import redirect_stderr, redirect_stdout
from unittest import mock

import pytest

from walkingcat.testing import MockResult, run_cli


def test_mock_result() -> typing.NoReturn:
    file_stdout = io.StringIO()
    file_stderr = io.StringIO()

    with (
        mock.patch("sys.exit") as sys_exit,
        redirect_stdout(file_stdout),
        redirect_stderr(file_stderr),
    ):
        print('{"n": 70}')
        sys.exit(3)
        result = MockResult(sys_exit, file_stdout, file_stderr)

        assert result.first_line == '{"n": 70}'
        assert result.exitcode == 3
        assert result.output == '{"n": 70}\n'
        assert result.json() == {"n": 70}
        assert result.stderr is None


def test_exitcode_without_exit() -> None:
    result = MockResult(mock.Mock(call_args=None), io.StringIO("x"), None)
    assert result.exitcode == 0


def test_json_without_stdout() -> None:
    result = MockResult(mock.Mock(call_args=None), None, io.StringIO("oops"))
    with pytest.raises(AssertionError, match="oops"):
        result.json()


def test_run_cli_usage_error() -> None:
    result = run_cli(["no-such-command"])
    assert result.exitcode == 2
    assert result.stderr
    assert "invalid choice" in result.stderr
