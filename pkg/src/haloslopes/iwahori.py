"""Iwahori action on locally analytic functions of the lower-unipotent
coordinates.

A point of N-bar(pZ_p) is a vector z = (z_ij)_{i>j}, packed row by row
(z_21, z_31, z_32, ...), with matrix N-bar(z) carrying p*z_ij at (i, j).
Functions are expanded ball by ball: on the ball z = center + p^r w the
function is a power series in the local variable w, truncated at total
degree D.  All series arithmetic is exact over p-integral rationals; the
only inexact inputs are character values, which live in a CycloContext.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from .newton import PreconditionError
from .padic import CycloContext, TruncatedElement, WildCharacter, teichmuller_int, vp, wild_exponent
from .weights import WeightCharacter, tame_order, wild_order


def lower_positions(n: int) -> List[Tuple[int, int]]:
    """Below-diagonal positions (i, j), 0-based, ordered row by row."""
    return [(i, j) for i in range(1, n) for j in range(i)]


def monomials(nvars: int, D: int) -> List[Tuple[int, ...]]:
    """Exponent vectors of total degree <= D, by degree then reverse-lex."""
    out = []
    for deg in range(D + 1):
        out.extend(_compositions(deg, nvars))
    return out


def _compositions(total: int, parts: int):
    if parts == 0:
        return [()] if total == 0 else []
    if parts == 1:
        return [(total,)]
    res = []
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            res.append((first,) + rest)
    return res


class Series:
    """Multivariate power series with p-integral rational coefficients,
    truncated above total degree D."""

    __slots__ = ("nvars", "D", "c")

    def __init__(self, nvars: int, D: int, coeffs: Optional[Dict[Tuple[int, ...], Fraction]] = None):
        self.nvars = nvars
        self.D = D
        self.c = {k: v for k, v in (coeffs or {}).items() if v != 0 and sum(k) <= D}

    @classmethod
    def const(cls, nvars: int, D: int, value) -> "Series":
        return cls(nvars, D, {(0,) * nvars: Fraction(value)})

    @classmethod
    def var(cls, nvars: int, D: int, index: int, scale=1, shift=0) -> "Series":
        """shift + scale * w_index."""
        e = [0] * nvars
        e[index] = 1
        return cls(nvars, D, {(0,) * nvars: Fraction(shift), tuple(e): Fraction(scale)})

    def constant(self) -> Fraction:
        return self.c.get((0,) * self.nvars, Fraction(0))

    def _wrap(self, other):
        if isinstance(other, Series):
            return other
        return Series.const(self.nvars, self.D, other)

    def __add__(self, other):
        other = self._wrap(other)
        out = dict(self.c)
        for k, v in other.c.items():
            out[k] = out.get(k, 0) + v
        return Series(self.nvars, self.D, out)

    __radd__ = __add__

    def __neg__(self):
        return Series(self.nvars, self.D, {k: -v for k, v in self.c.items()})

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __mul__(self, other):
        if not isinstance(other, Series):
            other = Fraction(other)
            return Series(self.nvars, self.D, {k: v * other for k, v in self.c.items()})
        D = self.D
        out: Dict[Tuple[int, ...], Fraction] = {}
        items = [(k, v, sum(k)) for k, v in other.c.items()]
        for k1, v1 in self.c.items():
            d1 = sum(k1)
            for k2, v2, d2 in items:
                if d1 + d2 > D:
                    continue
                key = tuple(a + b for a, b in zip(k1, k2))
                out[key] = out.get(key, 0) + v1 * v2
        return Series(self.nvars, D, out)

    __rmul__ = __mul__

    def inverse(self) -> "Series":
        c0 = self.constant()
        if c0 == 0:
            raise ZeroDivisionError("series has no constant term")
        rest = (self - c0) * (1 / c0)
        # 1/(c0 (1 + rest)) = (1/c0) sum (-rest)^k
        term = Series.const(self.nvars, self.D, 1)
        total = Series.const(self.nvars, self.D, 1)
        for _ in range(self.D):
            term = term * (-rest)
            if not term.c:
                break
            total = total + term
        return total * (1 / c0)

    def __truediv__(self, other):
        if isinstance(other, Series):
            return self * other.inverse()
        return self * (1 / Fraction(other))

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result = Series.const(self.nvars, self.D, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def min_valuation(self, p: int, skip_constant: bool = False) -> Optional[int]:
        vals = [vp(v, p) for k, v in self.c.items() if not (skip_constant and not any(k))]
        return min(vals) if vals else None

    def coefficient(self, exps: Tuple[int, ...]) -> Fraction:
        return self.c.get(tuple(exps), Fraction(0))

    def __repr__(self):
        return f"Series({dict(sorted(self.c.items()))})"


# -- matrices over series ------------------------------------------------------------


def series_matmul(a, b):
    n = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(n)), Series.const(_nv(a, b), _deg(a, b), 0))
             for j in range(n)] for i in range(n)]


def _nv(*mats):
    for m in mats:
        for row in m:
            for x in row:
                if isinstance(x, Series):
                    return x.nvars
    return 0


def _deg(*mats):
    for m in mats:
        for row in m:
            for x in row:
                if isinstance(x, Series):
                    return x.D
    return 0


def determinant(m):
    """Laplace expansion; fine for the small ranks used here."""
    n = len(m)
    if n == 1:
        return m[0][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * determinant(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def plucker(x, j: int, sigma: Sequence[int]):
    """Minor of x on rows sigma (1-based) and the first j columns."""
    if len(sigma) != j:
        raise PreconditionError("sigma must have j elements")
    rows = [x[s - 1][:j] for s in sigma]
    return determinant(rows)


def nbar_matrix(n: int, p: int, z: Dict[Tuple[int, int], object], nvars=0, D=0):
    """N-bar(z) with p*z_ij below the diagonal (0-based keys)."""
    one = Series.const(nvars, D, 1) if nvars else 1
    zero = Series.const(nvars, D, 0) if nvars else 0
    m = [[one if i == j else zero for j in range(n)] for i in range(n)]
    for (i, j), v in z.items():
        m[i][j] = v * p
    return m


def iwahori_factor(x, p: int):
    """Write x = N-bar(z) * b with b upper triangular.

    Returns (z, diag(b)).  z_ij is read off the unit-lower factor divided by
    p; a factor that is not divisible by p means x is not in the big cell
    over the ball and raises.
    """
    n = len(x)
    a = [list(row) for row in x]
    lower = {}
    diag = []
    for j in range(n):
        piv = a[j][j]
        c0 = piv.constant() if isinstance(piv, Series) else Fraction(piv)
        if c0 == 0 or vp(c0, p) != 0:
            raise PreconditionError("pivot is not a unit: element outside the Iwahori big cell")
        inv = piv.inverse() if isinstance(piv, Series) else 1 / Fraction(piv)
        diag.append(piv)
        for i in range(j + 1, n):
            f = a[i][j] * inv
            lower[(i, j)] = f
            if f != 0:
                for k in range(j, n):
                    a[i][k] = a[i][k] - f * a[j][k]
    z = {}
    for key, f in lower.items():
        if isinstance(f, Series):
            mv = f.min_valuation(p)
            if mv is not None and mv < 1:
                raise PreconditionError("lower factor is not in p*Z_p")
            z[key] = f * Fraction(1, p)
        else:
            f = Fraction(f)
            if f and vp(f, p) < 1:
                raise PreconditionError("lower factor is not in p*Z_p")
            z[key] = f / p
    return z, diag


def upper_unipotent(n: int, x: Dict[Tuple[int, int], int]) -> List[List[int]]:
    m = [[int(i == j) for j in range(n)] for i in range(n)]
    for (i, j), v in x.items():
        m[i][j] = v
    return m


def int_matinv(m) -> List[List[Fraction]]:
    """Exact inverse over Q."""
    n = len(m)
    a = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [u - f * v for u, v in zip(a[r], a[col])]
    return [row[n:] for row in a]


def check_iwahori(m, p: int) -> None:
    n = len(m)
    if len(m) != n or any(len(r) != n for r in m):
        raise PreconditionError("twist must be square")
    for i in range(n):
        for j in range(n):
            v = Fraction(m[i][j])
            if v.denominator % p == 0:
                raise PreconditionError("twist entries must be p-integral")
            if i > j and v and vp(v, p) < 1:
                raise PreconditionError("twist is not upper triangular mod p")
    det = Fraction(determinant([[Fraction(v) for v in r] for r in m]))
    if det == 0 or vp(det, p) != 0:
        raise PreconditionError("twist is not invertible over Z_p")


# -- torus characters ---------------------------------------------------------------


class TorusCharacter:
    """Evaluates s(d_1, ..., d_n) = prod chi_i(d_i) d_i^{t_i} for a weight."""

    def __init__(self, weight: WeightCharacter, K: int):
        self.weight = weight
        p = weight.p
        self.p = p
        self.K = K
        orders = [wild_order(p, c) for c in weight.conductors]
        level = max(vp(o, p) for o in orders)
        self.ctx = CycloContext(p, level, K)
        ks = weight.wild_ks()
        self.wild = [WildCharacter(p, c, k) for c, k in zip(weight.conductors, ks)]

    def chi_value(self, i: int, d: Fraction) -> TruncatedElement:
        """chi_i(d) for a p-adic unit d (given as a p-integral rational)."""
        p, K, ctx = self.p, self.K, self.ctx
        mod = p ** (K + 4)
        d = Fraction(d)
        if d.denominator % p == 0 or d.numerator % p == 0:
            raise PreconditionError("character argument is not a unit")
        u = d.numerator * pow(d.denominator, -1, mod) % mod
        tame_exp = self.weight.tame[i]
        if p == 2:
            sign = 1 if u % 4 == 1 else -1
            val = ctx.element(sign if tame_exp % 2 else 1)
            one_unit = u * sign % mod
        else:
            omega = teichmuller_int(p, u, K + 4)
            tv = pow(omega, tame_exp % (p - 1), mod)
            if tv == 1:
                val = ctx.element(1)
            elif tv == mod - 1:
                val = ctx.element(-1)
            else:
                val = ctx.element(tv, K)
            one_unit = u * pow(omega, -1, mod) % mod
        chi = self.wild[i]
        if not chi.is_trivial:
            r = wild_exponent(chi, one_unit, K)
            val = val * ctx.zeta(chi.order, r)
        return val

    def radius_needed(self, i: int) -> int:
        """Least r with chi_i trivial on 1 + p^r Z_p (0 when chi_i is trivial)."""
        w = self.weight
        nontrivial = w.conductors[i] > 1 or w.tame[i] % tame_order(self.p)
        return w.conductors[i] if nontrivial else 0

    def evaluate_series(self, diags: Sequence[Series]) -> Tuple[TruncatedElement, Series]:
        """s(d) over a ball as (constant character value, algebraic part series).

        The finite-order part must be constant on the ball: every nonconstant
        coefficient of d_i/d_i(0) - 1 needs valuation >= the radius at which
        chi_i becomes trivial.
        """
        const = self.ctx.element(1)
        alg = None
        for i, d in enumerate(diags):
            if not isinstance(d, Series):
                d = Series.const(0, 0, d)
            d0 = d.constant()
            need = self.radius_needed(i)
            if need:
                ratio = d * (1 / d0)
                mv = ratio.min_valuation(self.p, skip_constant=True)
                if mv is not None and mv < need:
                    raise CharacterNotConstant(i, mv, need)
                const = const * self.chi_value(i, d0)
            t = self.weight.t[i]
            if t:
                part = d ** t
                alg = part if alg is None else alg * part
        return const, alg


class CharacterNotConstant(PreconditionError):
    def __init__(self, index, found, needed):
        super().__init__(f"chi_{index + 1} varies on the ball (valuation {found} < {needed})")
        self.index = index


# -- the pullback map ---------------------------------------------------------------


@dataclass
class Pullback:
    """Everything needed to push one ball's worth of functions through a map."""

    in_ball: Tuple[int, ...]
    in_local: List[Series]  # new local coordinates w' as series in w
    char_const: TruncatedElement
    char_series: Optional[Series]


def ball_variables(n: int, p: int, center: Sequence[int], radius: int, D: int) -> Dict[Tuple[int, int], Series]:
    pos = lower_positions(n)
    nv = len(pos)
    return {ij: Series.var(nv, D, k, scale=p ** radius, shift=center[k]) for k, ij in enumerate(pos)}


def localize(n: int, p: int, z: Dict[Tuple[int, int], Series], radius: int) -> Tuple[Tuple[int, ...], List[Series]]:
    """Identify the ball containing the image and its local coordinates."""
    pos = lower_positions(n)
    center = []
    local = []
    mod = p ** radius
    for ij in pos:
        s = z[ij]
        c0 = s.constant()
        if c0.denominator % p:
            c0_int = c0.numerator * pow(c0.denominator, -1, mod) % mod if radius else 0
        else:
            raise PreconditionError("image point is not p-integral")
        mv = s.min_valuation(p, skip_constant=True)
        if mv is not None and mv < radius:
            raise PreconditionError("image of the ball is not inside a single ball")
        center.append(c0_int)
        local.append((s - c0_int) * Fraction(1, mod))
    return tuple(center), local


def pullback_through(steps, n: int, p: int, center: Sequence[int], radius: int, D: int,
                     chars: TorusCharacter) -> Pullback:
    """Compose a sequence of steps on the output ball.

    Each step is ("matrix", L) meaning z -> factor(L * N-bar(z)) and collecting
    the diagonal into the character, or ("scale", a) meaning z_ij ->
    p^{a_j - a_i} z_ij.
    """
    z = ball_variables(n, p, center, radius, D)
    nv = len(lower_positions(n))
    const = chars.ctx.element(1)
    alg = None
    for kind, data in steps:
        if kind == "scale":
            a = data
            z = {(i, j): v * Fraction(p) ** (a[j] - a[i]) for (i, j), v in z.items()}
        elif kind == "matrix":
            L = [[Series.const(nv, D, v) for v in row] for row in data]
            x = series_matmul(L, nbar_matrix(n, p, z, nv, D))
            z, diag = iwahori_factor(x, p)
            c, s = chars.evaluate_series(diag)
            const = const * c
            if s is not None:
                alg = s if alg is None else alg * s
        else:
            raise ValueError(kind)
    in_ball, local = localize(n, p, z, radius)
    return Pullback(in_ball, local, const, alg)


def scale_exponents(a: Sequence[int], e: Sequence[int]) -> int:
    """p-power by which u^a scales the monomial with exponents e (packed row by row)."""
    n = len(a)
    if any(a[i] < a[i + 1] for i in range(n - 1)):
        raise PreconditionError("a must be nonincreasing")
    pos = lower_positions(n)
    if len(e) != len(pos):
        raise PreconditionError("exponent vector has the wrong length")
    total = sum((a[j] - a[i]) * k for (i, j), k in zip(pos, e))
    if total < 0:
        raise PreconditionError("negative scaling exponent")
    return total


# -- functions -----------------------------------------------------------------------


def all_balls(n: int, p: int, radius: int) -> List[Tuple[int, ...]]:
    d = len(lower_positions(n))
    return [tuple(b) for b in product(range(p ** radius), repeat=d)]


@dataclass
class TruncatedFunction:
    """A locally analytic function: per ball, a truncated power series in the
    local coordinate with coefficients in the character ring."""

    weight: WeightCharacter
    radius: int
    D: int
    K: int
    coeffs: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], TruncatedElement] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.weight.n

    def evaluate(self, z: Sequence[Fraction]) -> TruncatedElement:
        p, r = self.weight.p, self.radius
        mod = p ** r
        ball = tuple(int(Fraction(v).numerator * pow(Fraction(v).denominator, -1, mod) % mod) if r else 0
                     for v in z)
        w = [(Fraction(v) - b) / mod for v, b in zip(z, ball)]
        ctx = self._ctx()
        total = ctx.element(0)
        for (bl, e), c in self.coeffs.items():
            if bl != ball:
                continue
            mono = Fraction(1)
            for wi, ei in zip(w, e):
                mono *= wi ** ei
            total = total + c * ctx.element(mono)
        return total.reduce(self.K)

    def _ctx(self) -> CycloContext:
        return TorusCharacter(self.weight, self.K).ctx


def act(u, f: TruncatedFunction) -> TruncatedFunction:
    """Left translation: (u f)(z) = s(b) f(z') where u^{-1} N-bar(z) = N-bar(z') b."""
    n, p = f.n, f.weight.p
    check_iwahori(u, p)
    chars = TorusCharacter(f.weight, f.K)
    uinv = int_matinv(u)
    mons = monomials(len(lower_positions(n)), f.D)
    out: Dict = {}
    balls = sorted({b for b, _ in f.coeffs}) if f.coeffs else []
    for ball in all_balls(n, p, f.radius):
        pb = pullback_through([("matrix", uinv)], n, p, ball, f.radius, f.D, chars)
        if pb.in_ball not in balls:
            continue
        series_by_exp = _local_powers(pb.in_local, mons, f.D)
        acc: Dict[Tuple[int, ...], TruncatedElement] = {}
        for (bl, e), c in f.coeffs.items():
            if bl != pb.in_ball:
                continue
            s = series_by_exp[e]
            if pb.char_series is not None:
                s = s * pb.char_series
            for k, v in s.c.items():
                term = c * chars.ctx.element(v)
                acc[k] = acc[k] + term if k in acc else term
        for k, v in acc.items():
            out[(ball, k)] = (v * pb.char_const).reduce(f.K)
    return TruncatedFunction(f.weight, f.radius, f.D, f.K, out)


def _local_powers(local: List[Series], mons: List[Tuple[int, ...]], D: int) -> Dict[Tuple[int, ...], Series]:
    """All products prod local_i^{e_i} for e in mons (built incrementally)."""
    nv = len(local)
    table: Dict[Tuple[int, ...], Series] = {(0,) * nv: Series.const(nv, D, 1)}
    for e in mons:
        if e in table:
            continue
        k = next(i for i, x in enumerate(e) if x)
        prev = list(e)
        prev[k] -= 1
        table[e] = table[tuple(prev)] * local[k]
    return table
