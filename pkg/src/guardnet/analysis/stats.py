"""Student's pooled-variance two-sample t-test.

p-values come from the regularized incomplete beta function, evaluated with
a modified-Lentz continued fraction:

    P(|T| >= |t|) = I_x(df/2, 1/2),  x = df / (df + t^2)
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal

import numpy as np

from guardnet.errors import (
    DegenerateError,
    FormatError,
    NumericError,
    RangeError,
    SampleSizeError,
)

Tails = Literal["one", "two"]

DEFAULT_ALPHA = 0.01
CF_TOLERANCE = 1e-12
CF_MAX_ITERATIONS = 10_000
_TINY = 1e-300


@dataclass(frozen=True, slots=True)
class TTestResult:
    t_statistic: float
    df: int
    p_value: float
    tails: Tails
    mean_a: float
    mean_b: float
    alpha: float = DEFAULT_ALPHA

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha

    def to_json(self) -> dict[str, Any]:
        return {
            "t_statistic": self.t_statistic,
            "df": self.df,
            "p_value": self.p_value,
            "tails": self.tails,
            "mean_a": self.mean_a,
            "mean_b": self.mean_b,
            "alpha": self.alpha,
            "significant": self.significant,
        }


@dataclass(frozen=True, slots=True)
class GroupComparison:
    category: str
    baseline_mean: float
    proposed_mean: float
    result: TTestResult

    def to_json(self) -> dict[str, Any]:
        return {
            "category": self.category,
            "baseline_mean": self.baseline_mean,
            "proposed_mean": self.proposed_mean,
            **self.result.to_json(),
        }


def _beta_continued_fraction(x: float, a: float, b: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_TOLERANCE:
            return h
    raise NumericError(f"incomplete beta did not converge for x={x}, a={a}, b={b}")


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    if a <= 0 or b <= 0:
        raise RangeError(f"beta parameters must be positive, got a={a}, b={b}")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(x, a, b) / a
    return 1.0 - front * _beta_continued_fraction(1.0 - x, b, a) / b


def _two_sided_tail(t: float, df: int) -> float:
    """P(|T| >= |t|)."""
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5)


def t_cdf(t: float, df: int) -> float:
    """CDF of Student's t with ``df`` degrees of freedom."""
    if df < 1:
        raise RangeError(f"df must be a positive integer, got {df}")
    if math.isnan(t):
        raise NumericError("t is NaN")
    if t == 0:
        return 0.5
    half_tail = 0.5 * _two_sided_tail(t, df)
    return 1.0 - half_tail if t > 0 else half_tail


def _as_sample(values: Iterable[float], name: str) -> np.ndarray:
    sample = np.asarray(list(values), dtype=np.float64)
    if sample.size < 2:
        raise SampleSizeError(f"sample {name} needs at least 2 values, got {sample.size}")
    if not np.all(np.isfinite(sample)):
        raise NumericError(f"sample {name} contains NaN or Inf")
    return sample


def two_sample_t_test(
    a: Iterable[float],
    b: Iterable[float],
    tails: Tails = "two",
    alpha: float = DEFAULT_ALPHA,
) -> TTestResult:
    """Pooled-variance t-test; the one-tailed alternative is mean(a) > mean(b)."""
    if tails not in ("one", "two"):
        raise RangeError(f"tails must be 'one' or 'two', got {tails!r}")
    sample_a = _as_sample(a, "a")
    sample_b = _as_sample(b, "b")
    n1, n2 = sample_a.size, sample_b.size
    df = n1 + n2 - 2
    mean_a = float(sample_a.mean())
    mean_b = float(sample_b.mean())
    pooled = ((n1 - 1) * sample_a.var(ddof=1) + (n2 - 1) * sample_b.var(ddof=1)) / df
    if pooled == 0:
        if mean_a == mean_b:
            raise DegenerateError("both samples are constant and equal; t is undefined")
        raise DegenerateError("pooled variance is zero; t is infinite")
    t = (mean_a - mean_b) / math.sqrt(pooled * (1.0 / n1 + 1.0 / n2))
    two_sided = _two_sided_tail(t, df)
    if tails == "two":
        p = two_sided
    elif t > 0:
        p = 0.5 * two_sided
    else:
        p = 1.0 - 0.5 * two_sided
    # Tail integrals underflow for extreme t; p stays strictly positive.
    p = max(p, math.ulp(0.0))
    return TTestResult(
        t_statistic=float(t),
        df=df,
        p_value=float(p),
        tails=tails,
        mean_a=mean_a,
        mean_b=mean_b,
        alpha=alpha,
    )


def compare_groups(
    rows: Iterable[tuple[str, Sequence[float], Sequence[float]]],
    tails: Tails = "two",
    alpha: float = DEFAULT_ALPHA,
) -> list[GroupComparison]:
    """Per-category baseline-vs-proposed tests; positive t means proposed scored higher."""
    comparisons = []
    for category, baseline, proposed in rows:
        result = two_sample_t_test(proposed, baseline, tails=tails, alpha=alpha)
        comparisons.append(
            GroupComparison(
                category=category,
                baseline_mean=result.mean_b,
                proposed_mean=result.mean_a,
                result=result,
            )
        )
    return comparisons


def load_samples(path: Path) -> list[float]:
    """Newline-separated numbers; blank lines and ``#`` comments are ignored."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    values: list[float] = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        try:
            values.append(float(stripped))
        except ValueError as exc:
            raise FormatError(f"{path}:{number}: not a number: {stripped!r}") from exc
    return values
