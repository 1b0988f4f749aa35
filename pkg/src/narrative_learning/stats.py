"""Trend regression over dates, slope p-values, and the Wilcoxon signed-rank test.

Dates are converted to fractional years (365.2425 days per year) so slopes
read directly as annual improvement. Slope significance uses the exact
t-distribution survival function, computed here via the regularized
incomplete beta function (no external stats dependency).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime
from typing import Literal, Sequence

DAYS_PER_YEAR = 365.2425

# Residual variance below this is treated as an exact fit and reported p = 0.
ZERO_RESIDUAL_EPS = 1e-12

# Largest effective sample for which the Wilcoxon null distribution is
# enumerated exactly; beyond it the tie-corrected normal approximation is used.
WILCOXON_EXACT_LIMIT = 25


class StatsError(ValueError):
    """Raised for undefined statistical requests (too few points, all-zero diffs)."""


DateLike = date | datetime | float | int


def to_year_fraction(when: DateLike) -> float:
    """Map a date to fractional years; numbers pass through unchanged."""
    if isinstance(when, datetime):
        when = when.date()
    if isinstance(when, date):
        return when.toordinal() / DAYS_PER_YEAR
    return float(when)


def year_fraction_to_date(years: float) -> date:
    ordinal = round(years * DAYS_PER_YEAR)
    ordinal = max(1, min(date.max.toordinal(), ordinal))
    return date.fromordinal(ordinal)


# ---------------------------------------------------------------------------
# Student's t survival function via the regularized incomplete beta function.
# ---------------------------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise StatsError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: int) -> float:
    """One-sided upper-tail probability P(T > t) for Student's t with df >= 1."""
    if df < 1:
        raise StatsError("t_sf requires df >= 1")
    if t == 0.0:
        return 0.5
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return tail if t > 0 else 1.0 - tail


def two_sided_t_pvalue(t: float, df: int) -> float:
    return min(1.0, 2.0 * t_sf(abs(t), df))


def normal_sf(z: float) -> float:
    """Upper-tail probability of the standard normal."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def bonferroni(p: float, m: int) -> float:
    """Family-wise adjusted p-value: min(1, m * p)."""
    if m < 1:
        raise StatsError("bonferroni requires m >= 1 tests")
    if p < 0:
        raise StatsError("p-value must be nonnegative")
    return min(1.0, m * p)


# ---------------------------------------------------------------------------
# OLS trend over dated observations.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrendResult:
    slope_per_year: float
    intercept: float
    p_value: float | None  # None = not applicable (fewer than 3 points)
    n_points: int
    residual_variance: float

    @property
    def slope_per_day(self) -> float:
        return self.slope_per_year / DAYS_PER_YEAR

    def value_at(self, when: DateLike) -> float:
        return self.intercept + self.slope_per_year * to_year_fraction(when)


def ols_trend(points: Sequence[tuple[DateLike, float]]) -> TrendResult:
    """Least-squares line of value on date with a two-sided slope p-value.

    The p-value comes from t = slope / se(slope) with n-2 degrees of freedom.
    An exact fit (residual variance below 1e-12) reports p = 0; with only two
    points the slope is reported but the p-value is flagged not-applicable.
    """
    if len(points) < 2:
        raise StatsError("trend requires at least 2 points")
    xs = [to_year_fraction(when) for when, _ in points]
    ys = [float(value) for _, value in points]
    if len(set(xs)) != len(xs):
        raise StatsError("trend requires distinct dates")

    n = len(xs)
    x_mean = sum(xs) / n
    y_mean = sum(ys) / n
    sxx = sum((x - x_mean) ** 2 for x in xs)
    sxy = sum((x - x_mean) * (y - y_mean) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean

    residuals = [y - (intercept + slope * x) for x, y in zip(xs, ys)]
    if n == 2:
        return TrendResult(slope, intercept, None, n, 0.0)

    s2 = sum(r * r for r in residuals) / (n - 2)
    if s2 < ZERO_RESIDUAL_EPS:
        return TrendResult(slope, intercept, 0.0, n, s2)
    se = math.sqrt(s2 / sxx)
    t = slope / se
    return TrendResult(slope, intercept, two_sided_t_pvalue(t, n - 2), n, s2)


@dataclass(frozen=True)
class SotaPrediction:
    status: Literal["already", "never", "future"]
    when: date | None = None


def predict_sota_date(
    trend: TrendResult,
    t_ref: DateLike,
    current_value: float,
    baseline_best: float,
) -> SotaPrediction:
    """When the fitted (lower-is-better) trend line crosses the best baseline.

    "already" when the current value beats the baseline (with the historical
    crossing date from the fitted line when it lies in the past); "never" when
    the trend is flat or worsening; otherwise the future crossing date.
    """
    crossing: date | None = None
    if trend.slope_per_year < 0:
        crossing = year_fraction_to_date((baseline_best - trend.intercept) / trend.slope_per_year)

    if current_value < baseline_best:
        ref = year_fraction_to_date(to_year_fraction(t_ref))
        if crossing is not None and crossing <= ref:
            return SotaPrediction("already", crossing)
        return SotaPrediction("already", None)
    if trend.slope_per_year >= 0:
        return SotaPrediction("never", None)
    return SotaPrediction("future", crossing)


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank test.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WilcoxonResult:
    w_plus: float
    p_value: float
    n_effective: int
    method: Literal["exact", "normal_approx"]


def midranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n with tied values sharing the average of their rank range."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _exact_two_sided_p(ranks: Sequence[float], w_plus: float) -> float:
    # Enumerate the null distribution of W+ by dynamic programming over
    # doubled ranks (midranks are multiples of 1/2, so doubling gives ints).
    doubled = [round(2 * r) for r in ranks]
    total = sum(doubled)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled:
        for s in range(total - r, -1, -1):
            if counts[s]:
                counts[s + r] += counts[s]
    observed = round(2 * w_plus)
    n_assignments = 2 ** len(ranks)
    p_le = sum(counts[: observed + 1]) / n_assignments
    p_ge = sum(counts[observed:]) / n_assignments
    return min(1.0, 2.0 * min(p_le, p_ge))


def _normal_approx_two_sided_p(ranks: Sequence[float], w_plus: float) -> float:
    n = len(ranks)
    mean = n * (n + 1) / 4.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0
    # Tie correction: subtract sum(t^3 - t)/48 over groups of tied |d|.
    groups: dict[float, int] = {}
    for r in ranks:
        groups[r] = groups.get(r, 0) + 1
    variance -= sum(t ** 3 - t for t in groups.values()) / 48.0
    if variance <= 0:
        return 1.0
    delta = w_plus - mean
    if delta == 0:
        return 1.0
    z = (abs(delta) - 0.5) / math.sqrt(variance)  # continuity correction
    z = max(z, 0.0)
    return min(1.0, 2.0 * normal_sf(z))


def wilcoxon_signed_rank(pairs: Sequence[tuple[float, float]]) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired observations.

    Differences a-b of exactly zero are dropped; |differences| are ranked
    with midranks; the reported statistic is W+ (sum of ranks of positive
    differences). The p-value is exact by enumeration up to 25 effective
    pairs, then a tie- and continuity-corrected normal approximation.
    """
    diffs = [float(a) - float(b) for a, b in pairs]
    diffs = [d for d in diffs if d != 0.0]
    if not diffs:
        raise StatsError("wilcoxon requires at least one nonzero difference")
    ranks = midranks([abs(d) for d in diffs])
    w_plus = sum(rank for rank, d in zip(ranks, diffs) if d > 0)
    n = len(diffs)
    if n <= WILCOXON_EXACT_LIMIT:
        return WilcoxonResult(w_plus, _exact_two_sided_p(ranks, w_plus), n, "exact")
    return WilcoxonResult(w_plus, _normal_approx_two_sided_p(ranks, w_plus), n, "normal_approx")
