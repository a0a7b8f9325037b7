"""Newton polygons with exact rational slopes, and a comparison harness for
polygons of congruent power series."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

from .padic import INFINITY, Valuation, fmt_rational, parse_rational


class PreconditionError(ValueError):
    """Raised when an input violates a documented precondition."""


@dataclass(frozen=True)
class NewtonPolygon:
    vertices: Tuple[Tuple[int, Fraction], ...]
    slopes: Tuple[Tuple[Fraction, int], ...] = field(default=())

    @property
    def length(self) -> int:
        return self.vertices[-1][0] if self.vertices else 0

    def value_at(self, x: Fraction) -> Optional[Fraction]:
        """Height of the polygon above x, or None beyond its last vertex."""
        x = Fraction(x)
        vs = self.vertices
        if x < vs[0][0] or x > vs[-1][0]:
            return None
        for (x0, y0), (x1, y1) in zip(vs, vs[1:]):
            if x0 <= x <= x1:
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        return vs[-1][1] if x == vs[-1][0] else None

    def slope_list(self) -> List[Fraction]:
        out = []
        for s, m in self.slopes:
            out.extend([s] * m)
        return out

    def to_json(self) -> dict:
        return {
            "vertices": [[x, fmt_rational(y)] for x, y in self.vertices],
            "slopes": [[fmt_rational(s), m] for s, m in self.slopes],
        }

    @staticmethod
    def from_json(obj: dict) -> "NewtonPolygon":
        verts = tuple((int(x), parse_rational(y)) for x, y in obj["vertices"])
        return polygon_from_vertices(verts)


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def polygon_from_vertices(verts: Sequence[Tuple[int, Fraction]]) -> NewtonPolygon:
    slopes: List[Tuple[Fraction, int]] = []
    for (x0, y0), (x1, y1) in zip(verts, verts[1:]):
        s = Fraction(y1 - y0, 1) / (x1 - x0)
        if slopes and slopes[-1][0] == s:
            slopes[-1] = (s, slopes[-1][1] + x1 - x0)
        else:
            slopes.append((s, x1 - x0))
    return NewtonPolygon(tuple(verts), tuple(slopes))


def _as_val(y) -> Valuation:
    if isinstance(y, Valuation):
        return y
    if y is None:
        return INFINITY
    return Valuation.of(y)


def lower_hull(points: Iterable[Tuple[int, object]]) -> NewtonPolygon:
    """Lower convex hull of (index, valuation) points.

    Points with infinite valuation are dropped; duplicate x keep the least y.
    """
    best: dict = {}
    for x, y in points:
        v = _as_val(y)
        if v.is_infinite:
            best.setdefault(int(x), None)
            continue
        if x < 0:
            raise PreconditionError("indices must be nonnegative")
        cur = best.get(int(x))
        if cur is None or v.value < cur:
            best[int(x)] = v.value
    if best.get(0) is None or best[0] != 0:
        raise PreconditionError("the point (0, 0) must be present")
    pts = sorted((x, y) for x, y in best.items() if y is not None)
    hull: List[Tuple[int, Fraction]] = []
    for pt in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) <= 0:
            hull.pop()
        hull.append(pt)
    return polygon_from_vertices(hull)


def slopes_below(poly: NewtonPolygon, alpha) -> Tuple[int, Tuple[int, Fraction]]:
    alpha = Fraction(alpha)
    count = 0
    end = poly.vertices[0]
    x, y = end
    for s, m in poly.slopes:
        if s >= alpha:
            break
        x += m
        y += s * m
        count += m
    return count, (x, y)


def interpolate(points: Sequence[Tuple[Fraction, Fraction]], x: Fraction) -> Optional[Fraction]:
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        if x0 <= x <= x1:
            if x1 == x0:
                return min(y0, y1)
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    if len(points) == 1 and points[0][0] == x:
        return points[0][1]
    return None


def lies_above(poly: NewtonPolygon, bound: Sequence) -> Tuple[bool, Optional[Fraction]]:
    """Check the polygon against a piecewise-linear bound on their common range.

    Both the bound's points and the polygon's vertices are tested, which is
    enough since both curves are linear between those abscissae.
    Returns (ok, first violating x).
    """
    pts = [(Fraction(getattr(b, "x", None) if hasattr(b, "x") else b[0]),
            Fraction(getattr(b, "y", None) if hasattr(b, "y") else b[1])) for b in bound]
    if not pts:
        return True, None
    if any(a[0] > b[0] for a, b in zip(pts, pts[1:])):
        raise PreconditionError("bound points must be sorted by x")
    xs = sorted(set([p[0] for p in pts] + [Fraction(v[0]) for v in poly.vertices]))
    for x in xs:
        py = poly.value_at(x)
        by = interpolate(pts, x)
        if py is None or by is None:
            continue
        if py < by:
            return False, x
    return True, None


# -- power-law curves and the m_nu function --------------------------------------


@dataclass(frozen=True)
class PowerLaw:
    """The curve nu(x) = coeff * x^exponent with positive rational data."""

    coeff: Fraction
    exponent: Fraction

    def __call__(self, x) -> Fraction:
        return eval_power(Fraction(self.coeff), Fraction(x), Fraction(self.exponent))

    def inverse_upper(self, y: Fraction) -> Fraction:
        """A rational at least nu^{-1}(y), exact when the root is rational."""
        y = Fraction(y)
        if y <= 0:
            return Fraction(0)
        target = y / self.coeff
        inv = 1 / Fraction(self.exponent)
        exact = rational_power(target, inv)
        if exact is not None:
            return exact
        lo, hi = Fraction(0), Fraction(1)
        while self._cmp(hi, y) < 0:
            hi *= 2
        tol = Fraction(1, 10 ** 9)
        while hi - lo > tol:
            mid = (lo + hi) / 2
            if self._cmp(mid, y) < 0:
                lo = mid
            else:
                hi = mid
        return hi

    def _cmp(self, x: Fraction, y: Fraction) -> int:
        """Sign of nu(x) - y, decided exactly."""
        lhs = x / 1
        target = y / self.coeff
        # compare x^exponent with target, i.e. x^num vs target^den
        e = Fraction(self.exponent)
        a = lhs ** e.numerator
        b = target ** e.denominator
        return (a > b) - (a < b)


def integer_root(n: int, k: int) -> Optional[int]:
    if n < 0:
        return None
    if n in (0, 1):
        return n
    r = int(round(n ** (1.0 / k))) if n.bit_length() < 1000 else 1 << (n.bit_length() // k)
    # Newton refinement
    while True:
        nxt = ((k - 1) * r + n // r ** (k - 1)) // k
        if nxt >= r:
            break
        r = nxt
    for c in (r - 1, r, r + 1):
        if c >= 0 and c ** k == n:
            return c
    return None


def rational_power(x: Fraction, e: Fraction) -> Optional[Fraction]:
    """x^e when the result is rational, else None."""
    x, e = Fraction(x), Fraction(e)
    if x == 0:
        return Fraction(0)
    num = integer_root(x.numerator, e.denominator)
    den = integer_root(x.denominator, e.denominator)
    if num is None or den is None:
        return None
    base = Fraction(num, den)
    return base ** e.numerator


def eval_power(coeff: Fraction, x: Fraction, e: Fraction) -> Fraction:
    """coeff * x^e, exact when rational, else a rational approximation to 1e-12."""
    exact = rational_power(x, e)
    if exact is not None:
        return coeff * exact
    approx = Fraction(float(x) ** float(e)).limit_denominator(10 ** 12)
    return coeff * approx


def m_nu(nu: PowerLaw, x) -> int:
    """floor(x * nu^{-1}(x)), clamped to 0 for x <= 0.

    When nu^{-1} is irrational the upper bisection end is used, which can only
    raise the value (and therefore strengthen the congruence required).
    """
    x = Fraction(x)
    if x <= 0:
        return 0
    return floor(x * nu.inverse_upper(x))


def wan_coincide(v1: Sequence, v2: Sequence, nu: Callable, alpha, diff_vals: Sequence,
                 inverse: Optional[Callable] = None) -> bool:
    """Whether the sides of slope <= alpha of two Newton polygons coincide.

    v1, v2 are coefficient valuations; diff_vals[N] is the valuation of the
    difference of the N-th coefficients.  The hypothesis is that every
    difference has valuation > m_nu(alpha) and both hulls lie on or above
    x * nu(x) for x >= 1; a violated hypothesis raises PreconditionError.
    """
    alpha = Fraction(alpha)
    vals1 = [_as_val(v) for v in v1]
    vals2 = [_as_val(v) for v in v2]
    diffs = [_as_val(v) for v in diff_vals]
    if len(vals1) != len(vals2) or len(diffs) != len(vals1):
        raise PreconditionError("coefficient lists have different lengths")
    if vals1[0] != 0 or vals2[0] != 0:
        raise PreconditionError("both series must start with a unit constant term")
    if Fraction(nu(0)) > 0:
        raise PreconditionError("nu(0) must be <= 0")
    grid = [Fraction(k, 4) for k in range(0, 4 * max(len(vals1), 2))]
    if any(Fraction(nu(b)) <= Fraction(nu(a)) for a, b in zip(grid, grid[1:]) if a > 0):
        raise PreconditionError("nu must be strictly increasing")
    h1, h2 = lower_hull(enumerate(vals1)), lower_hull(enumerate(vals2))
    for h in (h1, h2):
        for x in range(1, h.length + 1):
            if h.value_at(x) < x * Fraction(nu(x)):
                raise PreconditionError("hull lies below x*nu(x)")
    if inverse is not None:
        bound = floor(alpha * Fraction(inverse(alpha))) if alpha > 0 else 0
    elif isinstance(nu, PowerLaw):
        bound = m_nu(nu, alpha)
    else:
        raise PreconditionError("nu^{-1} unavailable")
    if any(not d.is_infinite and d.value <= bound for d in diffs):
        raise PreconditionError("coefficients are not congruent beyond m_nu(alpha)")
    return _sides_upto(h1, alpha) == _sides_upto(h2, alpha)


def _sides_upto(poly: NewtonPolygon, alpha: Fraction):
    out = []
    x, y = poly.vertices[0]
    for s, m in poly.slopes:
        if s > alpha:
            break
        out.append((x, y, s, m))
        x += m
        y += s * m
    return out
