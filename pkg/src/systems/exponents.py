"""Exact exponent algebra for the mixed Lebesgue admissibility conditions.

All arithmetic is done with sympy rationals and the symbolic infinity ``oo``;
floats only appear when a value is handed to the numerical side.
"""

from __future__ import annotations
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Union

import sympy
from sympy import Rational, oo

from src.systems.errors import InadmissibleExponentError

ExponentLike = Union[int, float, str, Fraction, sympy.Basic]


def to_exponent(value: ExponentLike) -> sympy.Expr:
    """Coerce user input (3, 1.5, "3/2", "inf", math.inf) to an exact exponent."""
    if isinstance(value, sympy.Basic):
        expr = value
    elif isinstance(value, str):
        text = value.strip().lower()
        if text in {"inf", "infinity", "oo", "+inf"}:
            return oo
        expr = Rational(text)
    elif isinstance(value, Fraction):
        expr = Rational(value.numerator, value.denominator)
    elif isinstance(value, float):
        if math.isinf(value) and value > 0:
            return oo
        if math.isnan(value) or math.isinf(value):
            raise InadmissibleExponentError(f"exponent {value!r} is not a number")
        expr = Rational(repr(value))
    elif isinstance(value, int):
        expr = Rational(value)
    else:
        raise InadmissibleExponentError(f"cannot interpret {value!r} as an exponent")
    if expr is oo or expr == oo:
        return oo
    if not expr.is_Rational:
        raise InadmissibleExponentError(f"exponent {value!r} is not rational")
    return expr


def to_float(value: ExponentLike) -> float:
    """Exact exponent to float, with +inf for oo."""
    expr = to_exponent(value)
    return math.inf if expr == oo else float(expr)


def format_exponent(value: ExponentLike) -> str:
    """Render as "inf", "2" or "3/2"."""
    expr = to_exponent(value)
    return "inf" if expr == oo else str(expr)


def conjugate(value: ExponentLike) -> sympy.Expr:
    """Hölder conjugate p' with 1/p + 1/p' = 1."""
    p = to_exponent(value)
    if p == oo:
        return Rational(1)
    if p == 1:
        return oo
    if p < 1:
        raise InadmissibleExponentError(f"conjugate undefined for p={p}")
    return p / (p - 1)


@dataclass(frozen=True)
class ExponentPair:
    """Spatial dimension with the spatial and temporal exponents of a mixed norm."""
    n: int
    q: Any
    r: Any

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise InadmissibleExponentError(f"dimension must be a positive integer, got {self.n}")
        object.__setattr__(self, "q", to_exponent(self.q))
        object.__setattr__(self, "r", to_exponent(self.r))
        if self.q < 1 or self.r < 1:
            raise InadmissibleExponentError(f"need q >= 1 and r >= 1, got q={self.q}, r={self.r}")

    @property
    def critical_sum(self) -> sympy.Expr:
        """n/(2q) + 1/r, exactly."""
        return Rational(self.n) / (2 * self.q) + 1 / self.r

    @property
    def admissible_divb(self) -> bool:
        return check_divb_admissible(self)[0]

    def describe(self) -> str:
        return f"(n={self.n}, q={format_exponent(self.q)}, r={format_exponent(self.r)})"


@dataclass(frozen=True)
class GNExponents:
    """Interpolation exponent of the Gagliardo-Nirenberg step and its companions."""
    n: int
    q: sympy.Expr
    theta: sympy.Expr
    q_conj: sympy.Expr
    r_derived: sympy.Expr

    @property
    def lebesgue_index(self) -> sympy.Expr:
        """The exponent 2q' of the interpolated norm."""
        return oo if self.q_conj == oo else 2 * self.q_conj


def check_divb_admissible(ep: ExponentPair) -> tuple[bool, str]:
    """Admissibility of div(b) in L^r_t L^q_x; the diagnostic names the failed clause."""
    half_n = Rational(ep.n, 2)
    if ep.n >= 2:
        if not ep.q > half_n:
            return False, f"q={format_exponent(ep.q)} must exceed n/2={half_n} for n >= 2"
        if ep.r == oo:
            return False, "r must be finite for n >= 2"
    else:
        if ep.r > 2:
            return False, f"r={format_exponent(ep.r)} must lie in [1, 2] for n = 1"
    total = ep.critical_sum
    if total > 1:
        return False, f"n/(2q) + 1/r = {total} exceeds 1"
    return True, f"n/(2q) + 1/r = {total} <= 1"


def gn_from_q(n: int, q: ExponentLike) -> GNExponents:
    """Solve 1/(2q') = 1/2 - theta/n for theta and set r = 1/(1 - theta)."""
    if n < 1:
        raise InadmissibleExponentError(f"dimension must be positive, got {n}")
    q_exact = to_exponent(q)
    if q_exact < 1:
        raise InadmissibleExponentError(f"q must be >= 1, got {q_exact}")
    q_conj = conjugate(q_exact)
    inv_half_conj = Rational(0) if q_conj == oo else 1 / (2 * q_conj)
    theta = Rational(n) * (Rational(1, 2) - inv_half_conj)
    if not (0 < theta < 1):
        raise InadmissibleExponentError(
            f"q={format_exponent(q_exact)} gives theta={theta} outside (0, 1) for n={n}"
        )
    r_derived = 1 / (1 - theta)
    # round trip: n/(2q) + 1/r must be exactly 1
    assert Rational(n) / (2 * q_exact) + 1 / r_derived == 1
    return GNExponents(n=n, q=q_exact, theta=theta, q_conj=q_conj, r_derived=r_derived)


def check_aronson_serrin_range(n: int, Q: ExponentLike, R: ExponentLike) -> bool:
    """n/(2Q) + 1/R <= 1/2 with R >= 2 and Q > n."""
    Q_exact = to_exponent(Q)
    R_exact = to_exponent(R)
    if not Q_exact > n or R_exact < 2:
        return False
    return bool(Rational(n) / (2 * Q_exact) + 1 / R_exact <= Rational(1, 2))


def scaling_exponent(ep: ExponentPair) -> sympy.Expr:
    """Exponent a in ||div b_lambda|| = lambda^a ||div b|| for b_lambda(x,t) = lambda b(lambda x, lambda^2 t)."""
    return 2 - Rational(ep.n) / ep.q - 2 / ep.r


def scaling_weight(lam: float, ep: ExponentPair) -> float:
    """Scaling factor of the mixed norm of div(b); exactly 1.0 on the critical line."""
    if lam <= 0:
        raise InadmissibleExponentError(f"lambda must be positive, got {lam}")
    exponent = scaling_exponent(ep)
    if exponent == 0:
        return 1.0
    return float(lam) ** float(exponent)


ADMISSIBILITY_COLUMNS = ["q", "r", "n_over_2q_plus_1_over_r", "admissible_divb", "admissible_AS", "theta_or_NA"]


def admissibility_table(n: int, qs: list[ExponentLike], rs: list[ExponentLike]) -> list[dict[str, str]]:
    """Rows for the `exponents` subcommand."""
    rows: list[dict[str, str]] = []
    for q in qs:
        for r in rs:
            ep = ExponentPair(n, q, r)
            ok, _ = check_divb_admissible(ep)
            try:
                theta = format_exponent(gn_from_q(n, ep.q).theta)
            except InadmissibleExponentError:
                theta = "NA"
            rows.append({
                "q": format_exponent(ep.q),
                "r": format_exponent(ep.r),
                "n_over_2q_plus_1_over_r": str(ep.critical_sum),
                "admissible_divb": str(ok).lower(),
                "admissible_AS": str(check_aronson_serrin_range(n, ep.q, ep.r)).lower(),
                "theta_or_NA": theta,
            })
    return rows
