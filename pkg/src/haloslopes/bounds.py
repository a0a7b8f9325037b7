"""Lower-bound point sequences, the upper-bound point, and the iterated
upper bounds obtained by perturbing the weight."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, comb
from typing import List, Optional, Tuple

from .newton import PowerLaw, PreconditionError, m_nu
from .padic import fmt_rational
from .reptheory import slope_budget, weyl_dim
from .weights import WeightCharacter, min_t_valuation, ratio_conductor, roche_subgroup, t_coordinates


@dataclass(frozen=True)
class BoundPoint:
    x: Fraction
    y: Fraction
    kind: str = "lower"

    def to_json(self) -> list:
        return [fmt_rational(self.x), fmt_rational(self.y)]


def _dim_pairs(n: int) -> int:
    return n * (n - 1) // 2


def lower_bound_points(n: int, p: int, h: int, vTa, M_max: int) -> List[BoundPoint]:
    """Exact points (x(M), y(M)) for M = 0..M_max.

    Degree-N rows number h * binom(N + d - 1, d - 1) with d = n(n-1)/2, and
    each is divisible by T_a^(N - floor(N/p)).
    """
    vTa = Fraction(vTa)
    if not 0 < vTa < 1:
        raise PreconditionError("v(T_a) must lie strictly between 0 and 1")
    if n < 2 or h < 1 or M_max < 0:
        raise PreconditionError("need n >= 2, h >= 1, M_max >= 0")
    d = _dim_pairs(n)
    out = []
    x, y = 0, Fraction(0)
    for N in range(M_max + 1):
        rows = h * comb(N + d - 1, d - 1)
        x += rows
        y += rows * (N - N // p) * vTa
        out.append(BoundPoint(Fraction(x), y, "lower"))
    return out


def growth_exponent(n: int) -> Fraction:
    return 1 + Fraction(2, n * (n - 1))


def _power_le(coeff: Fraction, x: Fraction, e: Fraction, bound: Fraction) -> bool:
    """coeff * x^e <= bound, decided exactly for x >= 0, coeff >= 0."""
    if bound < 0:
        return False
    # (coeff x^(a/b))^b = coeff^b x^a
    return coeff ** e.denominator * x ** e.numerator <= bound ** e.denominator


def lower_bound_constants(n: int, p: int, h: int, M: int = 50) -> Tuple[Fraction, Fraction]:
    """Informational power-law fit (A_1, C) of the point sequence in units of v(T_a).

    A_1 = y(M)/x(M)^e at M = 50; C is the least shift (to 1e-9) for which the
    curve A_1 x^e - C lies on or below every exact point up to M.
    """
    pts = lower_bound_points(n, p, h, Fraction(1, 2), M)
    e = growth_exponent(n)
    xs = [pt.x for pt in pts]
    ys = [pt.y * 2 for pt in pts]  # undo the v(T_a) = 1/2 used above
    A1 = Fraction(float(ys[-1]) / float(xs[-1]) ** float(e)).limit_denominator(10 ** 9)
    gap = max(float(A1) * float(x) ** float(e) - float(y) for x, y in zip(xs, ys))
    C = Fraction(ceil(max(gap, 0.0) * 10 ** 9), 10 ** 9)
    step = Fraction(1, 10 ** 9)
    while not all(_power_le(A1, x, e, y + C) for x, y in zip(xs, ys)):
        C += step
        step *= 2
    return A1, C


def _condition_one(w: WeightCharacter) -> bool:
    if not w.explicit:
        return True
    n = w.n
    return all(ratio_conductor(w, i, j, "data") == max(w.conductors[i], w.conductors[j])
               for i in range(n) for j in range(n) if i != j)


def default_a(n: int) -> Tuple[int, ...]:
    return tuple(range(n - 1, -1, -1))


@dataclass
class UpperBound:
    point: BoundPoint
    j_index: int
    d_t: int
    slope: Fraction
    t_product: Optional[float]
    product_le_max: bool
    A2: Optional[float] = None

    def to_json(self) -> dict:
        out = {"x": fmt_rational(self.point.x), "y": fmt_rational(self.point.y),
               "j_index": self.j_index, "d_t": self.d_t, "l_t": fmt_rational(self.slope),
               "product_le_max": self.product_le_max}
        if self.t_product is not None:
            out["t_product"] = repr(self.t_product)
        if self.A2 is not None:
            out["A2"] = repr(self.A2)
        return out


def tvaluation_product_check(w: WeightCharacter) -> Tuple[Optional[float], bool]:
    """prod_i v(T_(i))^(2i/(k(k+1))) over the k conductor-sorted free coordinates,
    and an exact check that it is at most max_i v(T_i)."""
    vals = t_coordinates(w)
    free = list(range(w.n - 1)) if w.last_trivial else list(range(w.n))
    ordered = [vals[i] for i in sorted(free, key=lambda i: (w.conductors[i], i))]
    if not ordered or any(v.is_infinite for v in ordered):
        return None, True
    k = len(ordered)
    vmax = max(v.value for v in ordered)
    lhs = Fraction(1)
    approx = 1.0
    for i, v in enumerate(ordered, start=1):
        lhs *= v.value ** (2 * i)
        approx *= float(v.value) ** (2 * i / (k * (k + 1)))
    # raising both sides to the power k(k+1) keeps everything rational
    return approx, lhs <= vmax ** (k * (k + 1))


def upper_bound_point(w: WeightCharacter, h: int, eps: Optional[Fraction] = None) -> UpperBound:
    """The point (h p^j d_t, h p^j d_t l(t)) with a = (n-1, ..., 0)."""
    if h < 1:
        raise PreconditionError("h must be positive")
    if not _condition_one(w):
        raise PreconditionError("ratio conductors are not the maxima of the conductors")
    n, p = w.n, w.p
    roche = roche_subgroup(w, "max")
    j = roche.j_formula
    d_t = weyl_dim(w.t)
    budget = slope_budget(n, default_a(n), w.m)
    x = Fraction(h * p ** j * d_t)
    y = x * budget.value
    prod, ok = tvaluation_product_check(w)
    A2 = None
    if eps is not None and prod:
        m = w.m[:-1] if w.last_trivial else w.m
        regular = all(m[i] >= eps * m[k] for i in range(len(m)) for k in range(len(m)) if i != k)
        if regular:
            A2 = float(y) / (prod * float(x) ** float(growth_exponent(n)))
    return UpperBound(BoundPoint(x, y, "upper"), j, d_t, budget.value, prod, ok, A2)


def phi_q(p: int) -> int:
    q = 4 if p == 2 else p
    return q - q // p


@dataclass
class IteratedBounds:
    points: List[BoundPoint]
    weights: List[Tuple[int, ...]]
    m_values: List[int]
    halted: bool

    def to_json(self) -> dict:
        return {"points": [pt.to_json() for pt in self.points],
                "t": [list(t) for t in self.weights],
                "m_nu": self.m_values, "halted": self.halted}


def iterated_upper_bounds(w: WeightCharacter, h: int, k_max: int, A1: Optional[Fraction] = None,
                          m_budget: int = 64) -> IteratedBounds:
    """Upper-bound points for the weights t^(k) reached by
    t_i <- t_i + (n - i) p^(m_nu(l(t)) + 1) phi(q)."""
    if k_max < 0:
        raise PreconditionError("k_max must be nonnegative")
    n, p = w.n, w.p
    if A1 is None:
        A1 = lower_bound_constants(n, p, h)[0]
    vmin = min_t_valuation(w)
    if vmin.is_infinite:
        raise PreconditionError("all weight coordinates vanish; the power law is degenerate")
    nu = PowerLaw(Fraction(A1) * vmin.value, Fraction(2, n * (n - 1)))
    t = tuple(w.t)
    pts, ts, ms = [], [], []
    halted = False
    for k in range(k_max + 1):
        cur = WeightCharacter(w.p, t, w.conductors, w.tame, w.wild_k, w.last_trivial)
        ub = upper_bound_point(cur, h)
        pts.append(ub.point)
        ts.append(t)
        if k == k_max:
            break
        mv = m_nu(nu, ub.slope)
        ms.append(mv)
        if mv > m_budget:
            halted = True
            break
        step = p ** (mv + 1) * phi_q(p)
        t = tuple(t[i] + (n - 1 - i) * step for i in range(n))
    return IteratedBounds(pts, ts, ms, halted)


def curve_value(A1: Fraction, C: Fraction, n: int, x: Fraction) -> float:
    """A_1 x^e - C as a float, for plotting."""
    return float(A1) * float(x) ** float(growth_exponent(n)) - float(C)
