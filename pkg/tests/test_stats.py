import math
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, special

from guardnet.analysis.stats import (
    compare_groups,
    load_samples,
    regularized_incomplete_beta,
    t_cdf,
    two_sample_t_test,
)
from guardnet.errors import DegenerateError, FormatError, RangeError, SampleSizeError


def _t_density(x: float, df: int) -> float:
    log_norm = (
        math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    )
    return math.exp(log_norm - (df + 1) / 2 * math.log1p(x * x / df))


def _oracle_two_sided(t: float, df: int) -> float:
    tail, _ = integrate.quad(_t_density, abs(t), np.inf, args=(df,), epsabs=1e-13, epsrel=1e-13)
    return 2 * tail


def test_t_cdf_closed_forms() -> None:
    assert t_cdf(0.0, 7) == 0.5
    assert t_cdf(1.0, 1) == pytest.approx(0.75, abs=1e-12)
    assert t_cdf(1e10, 3) == pytest.approx(1.0, abs=1e-9)
    assert t_cdf(-1e10, 3) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("df", [1, 2, 5, 48, 200])
@pytest.mark.parametrize("t", [0.1, 0.7, 1.5, 2.5, 4.12, 8.0])
def test_t_cdf_symmetry_and_quadrature(t: float, df: int) -> None:
    assert t_cdf(-t, df) == pytest.approx(1 - t_cdf(t, df), abs=1e-12)
    assert 2 * (1 - t_cdf(t, df)) == pytest.approx(_oracle_two_sided(t, df), abs=1e-6)


@pytest.mark.parametrize(("x", "a", "b"), [(0.3, 2.0, 3.0), (0.9, 24.0, 0.5), (0.01, 0.5, 0.5)])
def test_incomplete_beta_matches_scipy(x: float, a: float, b: float) -> None:
    assert regularized_incomplete_beta(x, a, b) == pytest.approx(special.betainc(a, b, x), abs=1e-12)


def test_incomplete_beta_bounds() -> None:
    assert regularized_incomplete_beta(0.0, 2.0, 3.0) == 0.0
    assert regularized_incomplete_beta(1.0, 2.0, 3.0) == 1.0
    with pytest.raises(RangeError):
        regularized_incomplete_beta(0.5, 0.0, 1.0)


def test_fixture_matches_quadrature_oracle() -> None:
    a = [1.0, 2.0, 3.0, 4.0, 5.0]
    b = [2.0, 3.0, 4.0, 5.0, 6.0]

    result = two_sample_t_test(a, b)

    assert result.df == 8
    assert result.t_statistic == pytest.approx(-1 / math.sqrt(2.5 * 0.4), abs=1e-12)
    assert result.p_value == pytest.approx(_oracle_two_sided(result.t_statistic, 8), abs=1e-6)
    assert result.mean_a == 3.0 and result.mean_b == 4.0
    assert not result.significant


def test_one_tailed_direction() -> None:
    a = [5.1, 6.0, 5.8, 6.3, 5.5, 6.1]
    b = [4.0, 4.4, 3.9, 4.8, 4.1, 4.6]

    greater = two_sample_t_test(a, b, tails="one")
    less = two_sample_t_test(b, a, tails="one")
    two = two_sample_t_test(a, b)

    assert greater.p_value == pytest.approx(two.p_value / 2, rel=1e-9)
    assert less.p_value == pytest.approx(1 - two.p_value / 2, rel=1e-9)
    assert greater.significant


def test_df_for_two_groups_of_twenty_five() -> None:
    rng = np.random.default_rng(0)

    result = two_sample_t_test(rng.normal(90, 3, 25), rng.normal(85, 3, 25))

    assert result.df == 48


@pytest.mark.parametrize("tails", ["one", "two"])
def test_extreme_t_keeps_p_positive(tails: str) -> None:
    a = [1e6 + 1e-3 * i for i in range(25)]
    b = [1e-3 * i for i in range(25)]

    result = two_sample_t_test(a, b, tails=tails)

    assert result.df == 48
    assert result.t_statistic > 1e8
    assert 0.0 < result.p_value <= 1.0
    assert result.significant


def test_identical_samples_give_t_zero_p_one() -> None:
    sample = [0.91, 0.88, 0.95, 0.90]

    result = two_sample_t_test(sample, list(sample))

    assert result.t_statistic == 0.0
    assert result.p_value == 1.0


def test_t_is_invariant_to_shift_and_scale() -> None:
    rng = np.random.default_rng(3)
    a = rng.normal(0, 1, 12)
    b = rng.normal(0.5, 1, 9)

    base = two_sample_t_test(a, b).t_statistic

    assert two_sample_t_test(a + 100, b + 100).t_statistic == pytest.approx(base, abs=1e-9)
    assert two_sample_t_test(a * 7.5, b * 7.5).t_statistic == pytest.approx(base, abs=1e-12)


def test_swapping_samples_flips_t() -> None:
    a, b = [1.0, 2.5, 3.0], [2.0, 2.2, 4.1, 5.0]

    assert two_sample_t_test(a, b).t_statistic == pytest.approx(
        -two_sample_t_test(b, a).t_statistic, abs=1e-12
    )


def test_sample_size_and_degenerate_errors() -> None:
    with pytest.raises(SampleSizeError):
        two_sample_t_test([1.0], [1.0, 2.0])
    with pytest.raises(DegenerateError):
        two_sample_t_test([2.0, 2.0], [2.0, 2.0])
    with pytest.raises(DegenerateError):
        two_sample_t_test([2.0, 2.0], [3.0, 3.0])


def test_compare_groups_orients_proposed_against_baseline() -> None:
    rows = [
        ("admin", [0.80, 0.82, 0.79, 0.81], [0.90, 0.91, 0.89, 0.92]),
        ("intruder", [0.97, 0.98, 0.99, 0.98], [0.98, 0.99, 0.98, 0.99]),
    ]

    comparisons = compare_groups(rows, tails="one")

    assert [row.category for row in comparisons] == ["admin", "intruder"]
    assert comparisons[0].result.t_statistic > 0
    assert comparisons[0].proposed_mean == pytest.approx(0.905)
    assert comparisons[0].baseline_mean == pytest.approx(0.805)
    assert comparisons[0].result.significant
    assert "t_statistic" in comparisons[1].to_json()


def test_load_samples(tmp_path: Path) -> None:
    path = tmp_path / "a.txt"
    path.write_text("# accuracies\n0.9\n\n0.85  \n1e-1\n", encoding="utf-8")

    assert load_samples(path) == [0.9, 0.85, 0.1]


def test_load_samples_reports_bad_line(tmp_path: Path) -> None:
    path = tmp_path / "bad.txt"
    path.write_text("0.9\nninety\n", encoding="utf-8")

    with pytest.raises(FormatError, match=":2:"):
        load_samples(path)
