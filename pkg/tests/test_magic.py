import numpy as np
import pytest

from walkingcat import WalkingCatError
from walkingcat.magic import (
    MEK_ACCEPT,
    MEK_ANY_OUTPUT,
    MEK_ONE_OUTPUT,
    ch2_model,
    factory_model,
    injection_model,
    mek_model,
    mek_oracle,
    mek_oracle_coefficients,
    mek_polynomials,
    output_error_curve,
    round_count,
    solve_runtime_iteratively,
)


class TestInjection:
    def test_ch2_injection(self) -> None:
        inj = injection_model("Q54", 16)
        assert inj.r == 3
        assert inj.q_y == pytest.approx(2.68e-4, rel=5e-3)
        assert inj.p_retry == pytest.approx(1.12e-2, rel=1e-2)

    def test_mek_injection(self) -> None:
        inj = injection_model("Q70", 18)
        assert inj.r == 3
        assert inj.q_y == pytest.approx(2.67e-4, rel=5e-3)
        assert inj.p_retry == pytest.approx(1.24e-2, rel=1e-2)

    def test_noiseless_injection(self) -> None:
        inj = injection_model("Q54", 16, p=0.0)
        assert inj.q_y == 0.0
        assert inj.p_retry == pytest.approx(inj.p_anc)

    def test_round_count(self) -> None:
        assert round_count(16, 1e-4, 3e-10) == 3
        assert round_count(16, 1e-5, 0.0) == 2
        with pytest.raises(WalkingCatError, match="floor"):
            round_count(16, 1e-4, 1e-5)


class TestCH2:
    def test_published_parameters(self) -> None:
        model = ch2_model()
        assert model.kind == "CH2"
        assert model.host == "Q54"
        assert model.width == 54
        assert model.a_ver == pytest.approx(0.99946, abs=1e-5)
        assert model.p_fail == pytest.approx(2.28e-2, rel=1e-2)
        assert model.p_out == pytest.approx(7.2e-8, rel=1e-2)
        assert model.n_sec_avg == pytest.approx(13.44, rel=5e-3)

    def test_time(self) -> None:
        model = ch2_model()
        assert model.time(2e-3) == pytest.approx(model.n_sec_avg * 2e-3)


class TestMEK:
    def test_published_parameters(self) -> None:
        model = mek_model()
        assert model.kind == "MEK"
        assert model.host == "Q70"
        assert model.a_ver == pytest.approx(0.99733, abs=1e-5)
        assert model.p_out == pytest.approx(3.6e-7, rel=2e-2)
        assert model.p_fail == pytest.approx(11.97e-2, rel=1e-2)
        assert model.n_sec_avg == pytest.approx(47.6, rel=5e-3)

    def test_odd_branch(self) -> None:
        a, u, u2 = mek_polynomials(2.67e-4)
        assert 2 * (u2 - u) == pytest.approx(5.70e-7, rel=1e-2)

    def test_oracle_without_faults(self) -> None:
        assert mek_oracle(0.0) == (1.0, 0.0, 0.0)

    def test_single_faults_are_rejected(self) -> None:
        a, u, u2 = mek_oracle_coefficients()
        # a(q) = 1 - 10q + ...: no accepted pattern carries exactly one fault
        assert a[1] == -10
        assert u[1] == 0 and u2[1] == 0

    def test_oracle_matches_polynomials(self) -> None:
        for q in (1e-4, 1e-3, 1e-2):
            assert mek_oracle(q) == pytest.approx(mek_polynomials(q), abs=1e-12)

    def test_oracle_coefficients_exact(self) -> None:
        a, u, u2 = mek_oracle_coefficients()
        assert tuple(a) == MEK_ACCEPT
        assert tuple(u) == MEK_ONE_OUTPUT
        assert tuple(u2) == MEK_ANY_OUTPUT


class TestRuntime:
    @pytest.mark.parametrize("build", [ch2_model, mek_model])
    def test_fixed_point_matches_closed_form(self, build) -> None:  # type: ignore[no-untyped-def]
        model = build()
        s = model.n_sec_avg * (1 - model.p_fail)
        n = solve_runtime_iteratively(s, model.p_fail)
        assert n == pytest.approx(model.n_sec_avg, rel=1e-12)

    def test_invalid_failure_probability(self) -> None:
        with pytest.raises(ValueError):
            solve_runtime_iteratively(1.0, 1.0)


def test_factory_lookup() -> None:
    assert factory_model("ch2").kind == "CH2"
    assert factory_model("MEK").kind == "MEK"
    with pytest.raises(WalkingCatError, match="unknown magic factory"):
        factory_model("15to1")


@pytest.mark.parametrize("kind", ["CH2", "MEK"])
def test_output_error_is_monotone(kind: str) -> None:
    curve = output_error_curve(kind, np.linspace(0.0, 0.1, 101))
    assert curve[0] == 0.0
    assert np.all(np.diff(curve) > 0)
