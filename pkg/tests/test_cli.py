import pandas
import pytest

from walkingcat.testing import run_cli


class TestCode:
    def test_info_from_polynomials(self) -> None:
        result = run_cli(
            ["code", "info", "--family", "BB", "--l", "7", "--m", "5", "--A", "y2,x2,x3,x4", "--B", "y,x,x3"]
        )
        assert result.exitcode == 0
        data = result.json()
        assert data["n"] == 70
        assert data["k"] == 6

    def test_info_by_name(self) -> None:
        data = run_cli(["code", "info", "Q54"]).json()
        assert (data["n"], data["k"]) == (54, 2)

    def test_bad_polynomial_names_the_term(self) -> None:
        result = run_cli(
            ["code", "info", "--family", "BB", "--l", "7", "--m", "5", "--A", "y2,x2q,x3", "--B", "y,x,x3"]
        )
        assert result.exitcode == 3
        assert result.stderr is not None
        assert "PolynomialSyntaxError" in result.stderr
        assert "x2q" in result.stderr

    def test_unknown_code(self) -> None:
        result = run_cli(["code", "info", "Q999"])
        assert result.exitcode == 3
        assert result.first_line is not None
        assert result.first_line.startswith("ERROR: ")

    def test_list_writes_csv(self, tmp_path) -> None:  # type: ignore[no-untyped-def]
        out = tmp_path / "codes.csv"
        result = run_cli(["code", "list", "--out", str(out)])
        assert result.exitcode == 0
        table = pandas.read_csv(out)
        assert "Q70" in set(table["name"])
        assert len(table) == len(result.json()["codes"])


class TestUsage:
    def test_unknown_flag(self) -> None:
        result = run_cli(["measure", "viterbi", "--w", "54", "--bogus"])
        assert result.exitcode == 2
        assert result.stderr is not None
        assert "usage" in result.stderr

    def test_missing_subcommand(self) -> None:
        assert run_cli([]).exitcode == 2

    def test_timeout_option(self) -> None:
        assert run_cli(["-t", "60", "measure", "table"]).exitcode == 0

    def test_out_without_table(self) -> None:
        result = run_cli(["magic", "model", "--kind", "ch2", "--out", "/nonexistent/never.csv"])
        assert result.exitcode == 3
        assert "no tabular output" in result.output


class TestMeasure:
    def test_viterbi(self) -> None:
        data = run_cli(["measure", "viterbi", "--w", "54", "--eps", "1e-10", "--p", "1e-4"]).json()
        assert data["expected_sec"] == pytest.approx(6.31, abs=0.01)
        assert data["margin"] == 6

    def test_identical_output_for_identical_seed(self) -> None:
        argv = ["measure", "viterbi", "--w", "30", "--mc-shots", "2000", "--seed", "7"]
        assert run_cli(argv).stdout == run_cli(argv).stdout

    def test_table(self) -> None:
        rows = run_cli(["measure", "table"]).json()["rows"]
        assert [row["w"] for row in rows] == [10, 20, 30, 54]


class TestModels:
    def test_magic(self) -> None:
        data = run_cli(["magic", "model", "--kind", "mek"]).json()
        assert data["kind"] == "MEK"
        assert data["n_sec_avg"] == pytest.approx(47.6, rel=5e-3)

    def test_cat(self) -> None:
        data = run_cli(["cat", "model", "--w", "30"]).json()
        assert data["w"] == 30

    def test_decode_plan(self) -> None:
        data = run_cli(["decode", "plan", "--rounds", "10", "--window", "5,3"]).json()
        assert data["windows"] == 3
        assert data["w_last"] == 4

    def test_reservoir_failure(self) -> None:
        data = run_cli(["reservoir", "failure", "--config", "5,5,10,2", "--L", "15", "--R", "60", "--steps", "50"]).json()
        assert 0.0 < data["failure"] < 1.0

    @pytest.mark.slow
    def test_reservoir_size(self) -> None:
        data = run_cli(["reservoir", "size", "--M", "20", "--T", "20", "--C", "40", "--B", "5"]).json()
        assert (data["L"], data["R"]) == (28, 188)


class TestEstimate:
    def test_single_config(self) -> None:
        data = run_cli(["estimate", "--config", "5xQ102+1xCH2"]).json()
        assert data["logical_qubits"] == 110
        assert data["allocation"]["memory"] == 1580

    def test_several_configs_to_csv(self, tmp_path) -> None:  # type: ignore[no-untyped-def]
        out = tmp_path / "estimate.csv"
        result = run_cli(["estimate", "--config", "17xQ70+3xMEK,5xQ102+1xCH2", "--out", str(out)])
        assert len(result.json()) == 2
        table = pandas.read_csv(out)
        assert table["total"].tolist() == [row["allocation"]["total"] for row in result.json()]

    def test_tradeoff(self) -> None:
        rows = run_cli(["estimate", "--tradeoff", "4"]).json()["tradeoff"]
        assert len(rows) == 5
        assert rows[-1]["t_per_day"] == 0.0
        assert rows[-1]["logical_qubits"] == 24

    def test_bad_config(self) -> None:
        result = run_cli(["estimate", "--config", "17xQ70+3xFOO"])
        assert result.exitcode == 3
        assert "FOO" in result.output
