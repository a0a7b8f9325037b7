"""Exact arithmetic in truncated cyclotomic extensions of Q_p.

Elements of Z_p[zeta_{p^l}] are stored as integer coefficient vectors against
the powers of the uniformizer pi = zeta_{p^l} - 1.  Since pi^e = p * unit, an
element sum a_i pi^i has valuation min(v_p(a_i) + i/e), which makes valuation
floors a coefficient scan.  Precision is absolute: a truncated element is known
modulo p^prec in every coefficient.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil, gcd
from typing import Optional, Sequence, Union

Rational = Union[int, Fraction]


def vp(n: Rational, p: int) -> Optional[int]:
    """p-adic valuation of a nonzero rational; None for zero."""
    if isinstance(n, Fraction):
        if n == 0:
            return None
        return vp(n.numerator, p) - vp(n.denominator, p)
    if n == 0:
        return None
    n = abs(n)
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def parse_rational(s: Union[str, int, Fraction]) -> Fraction:
    if isinstance(s, Fraction):
        return s
    if isinstance(s, int):
        return Fraction(s)
    return Fraction(str(s).strip())


def fmt_rational(x: Rational) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Valuation:
    """A valuation normalized by v(p) = 1.  The infinite value is a tagged variant."""

    value: Optional[Fraction]

    @staticmethod
    def of(x: Rational) -> "Valuation":
        return Valuation(Fraction(x))

    @staticmethod
    def infinity() -> "Valuation":
        return INFINITY

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def __add__(self, other: Union["Valuation", Rational]) -> "Valuation":
        if not isinstance(other, Valuation):
            other = Valuation.of(other)
        if self.is_infinite or other.is_infinite:
            return INFINITY
        return Valuation(self.value + other.value)

    __radd__ = __add__

    def __sub__(self, other: Rational) -> "Valuation":
        if self.is_infinite:
            return INFINITY
        return Valuation(self.value - Fraction(other))

    def __mul__(self, k: Rational) -> "Valuation":
        if self.is_infinite:
            return INFINITY
        return Valuation(self.value * Fraction(k))

    def _key(self):
        return (1, 0) if self.is_infinite else (0, self.value)

    def __lt__(self, other):
        if not isinstance(other, Valuation):
            other = Valuation.of(other)
        return self._key() < other._key()

    def __le__(self, other):
        if not isinstance(other, Valuation):
            other = Valuation.of(other)
        return self._key() <= other._key()

    def __gt__(self, other):
        if not isinstance(other, Valuation):
            other = Valuation.of(other)
        return self._key() > other._key()

    def __ge__(self, other):
        if not isinstance(other, Valuation):
            other = Valuation.of(other)
        return self._key() >= other._key()

    def __eq__(self, other):
        if isinstance(other, Valuation):
            return self.value == other.value
        if isinstance(other, (int, Fraction)):
            return self.value is not None and self.value == other
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def __str__(self):
        return "inf" if self.is_infinite else fmt_rational(self.value)

    __repr__ = __str__

    def to_json(self) -> str:
        return str(self)

    @staticmethod
    def from_json(s: str) -> "Valuation":
        if str(s).strip().lower() in ("inf", "infinity"):
            return INFINITY
        return Valuation(parse_rational(s))


INFINITY = Valuation(None)


def vmin(*vals: Valuation) -> Valuation:
    return min(vals)


def cyclotomic_poly_pp(p: int, level: int) -> list:
    """Coefficients (low to high) of Phi_{p^level}(x)."""
    step = p ** (level - 1)
    coeffs = [0] * ((p - 1) * step + 1)
    for i in range(p):
        coeffs[i * step] = 1
    return coeffs


def shift_poly(coeffs: Sequence[int]) -> list:
    """Coefficients of f(x + 1) given those of f(x)."""
    out = [0] * len(coeffs)
    for k, c in enumerate(coeffs):
        if c == 0:
            continue
        binom = 1
        for i in range(k + 1):
            out[i] += c * binom
            binom = binom * (k - i) // (i + 1)
    return out


class CycloContext:
    """Ring Z_p[zeta_{p^level}] kept modulo p^K.

    A context of wild level l carries the p^l-th roots of unity, which are the
    values needed by characters of conductor up to l + 1 (up to l + 2 when p=2).
    """

    def __init__(self, p: int, wild_level: int = 0, K: int = 20):
        if p < 2 or any(p % d == 0 for d in range(2, int(p ** 0.5) + 1)):
            raise ValueError(f"{p} is not prime")
        if wild_level < 0 or K < 1:
            raise ValueError("wild level must be >= 0 and precision >= 1")
        self.p = p
        self.q = 4 if p == 2 else p
        self.wild_level = wild_level
        self.K = K
        if wild_level >= 1:
            self.e = p ** (wild_level - 1) * (p - 1)
            self.minpoly = shift_poly(cyclotomic_poly_pp(p, wild_level))
        else:
            self.e = 1
            self.minpoly = [-p, 1]
        self.root_order = p ** wild_level
        self._reduce_rows = self._build_reduction()
        self._zeta_cache: dict = {}

    def _build_reduction(self):
        # rows[k] = coefficients of pi^(e+k) in the basis 1..pi^(e-1)
        e = self.e
        tail = [-c for c in self.minpoly[:e]]
        rows = [tail]
        for _ in range(e - 2):
            prev = rows[-1]
            nxt = [0] + prev[:-1]
            top = prev[-1]
            if top:
                nxt = [a + top * b for a, b in zip(nxt, tail)]
            rows.append(nxt)
        return rows

    def reduce_poly(self, coeffs: Sequence[int]) -> list:
        e = self.e
        out = list(coeffs[:e]) + [0] * max(0, e - len(coeffs))
        for k, c in enumerate(coeffs[e:]):
            if c:
                row = self._reduce_rows[k]
                for i in range(e):
                    out[i] += c * row[i]
        return out

    def mul_vec(self, a: Sequence, b: Sequence) -> list:
        e = self.e
        if e == 1:
            return [a[0] * b[0]]
        prod = [0] * (2 * e - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    if y:
                        prod[i + j] += x * y
        return self.reduce_poly(prod)

    def zeta_power_vec(self, r: int) -> tuple:
        """Coordinates of zeta_{p^l}^r in the pi basis (exact integers)."""
        r %= self.root_order
        if r not in self._zeta_cache:
            if r == 0:
                v = [1] + [0] * (self.e - 1)
            else:
                prev = list(self.zeta_power_vec(r - 1))
                # multiply by zeta = 1 + pi
                shifted = [0] + prev
                v = self.reduce_poly([a + b for a, b in zip(prev + [0], shifted)])
            self._zeta_cache[r] = tuple(v)
        return self._zeta_cache[r]

    def zeta(self, order: int, exponent: int = 1) -> "TruncatedElement":
        """Exact element zeta_order^exponent, for order dividing p^level."""
        if self.root_order % order:
            raise ValueError(f"roots of unity of order {order} are not in this context")
        return TruncatedElement(self, self.zeta_power_vec(exponent * (self.root_order // order)))

    def element(self, value: Rational, prec: Optional[int] = None) -> "TruncatedElement":
        return TruncatedElement(self, [value] + [0] * (self.e - 1), prec)

    def uniformizer(self) -> "TruncatedElement":
        if self.e == 1:
            return self.element(self.p if self.wild_level == 0 else -2)
        return TruncatedElement(self, [0, 1] + [0] * (self.e - 2))

    def __repr__(self):
        return f"CycloContext(p={self.p}, wild_level={self.wild_level}, K={self.K})"


class TruncatedElement:
    """Element of a CycloContext ring with a certified valuation floor.

    prec is None for exactly known elements (coefficients may then be Fractions);
    otherwise each coefficient is known modulo p^prec.
    """

    __slots__ = ("ctx", "coeffs", "prec")

    def __init__(self, ctx: CycloContext, coeffs: Sequence, prec: Optional[int] = None):
        self.ctx = ctx
        if len(coeffs) != ctx.e:
            coeffs = ctx.reduce_poly(list(coeffs))
        if prec is not None:
            m = ctx.p ** prec
            coeffs = [_mod_rational(c, m, ctx.p) for c in coeffs]
        self.coeffs = tuple(coeffs)
        self.prec = prec

    @property
    def exact(self) -> bool:
        return self.prec is None

    def _coerce(self, other) -> "TruncatedElement":
        if isinstance(other, TruncatedElement):
            return other
        return self.ctx.element(other)

    def __add__(self, other):
        other = self._coerce(other)
        prec = _min_prec(self.prec, other.prec)
        return TruncatedElement(self.ctx, [a + b for a, b in zip(self.coeffs, other.coeffs)], prec)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedElement(self.ctx, [-a for a in self.coeffs], self.prec)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        if (self.prec is None and not any(self.coeffs)) or (other.prec is None and not any(other.coeffs)):
            return TruncatedElement(self.ctx, [0] * self.ctx.e)
        precs = []
        if self.prec is not None:
            precs.append(self.prec + _floor_int(other.val_floor()))
        if other.prec is not None:
            precs.append(other.prec + _floor_int(self.val_floor()))
        prec = min(precs) if precs else None
        return TruncatedElement(self.ctx, self.ctx.mul_vec(self.coeffs, other.coeffs), prec)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not supported")
        result = self.ctx.element(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def div_int(self, n: int) -> "TruncatedElement":
        """Divide by a nonzero integer; truncated elements must be divisible."""
        p = self.ctx.p
        s = vp(n, p)
        unit = n // p ** s
        if self.prec is None:
            return TruncatedElement(self.ctx, [Fraction(c) / n for c in self.coeffs])
        newprec = self.prec - s
        if newprec <= 0:
            return TruncatedElement(self.ctx, [0] * self.ctx.e, max(newprec, 0))
        m = p ** self.prec
        inv = pow(unit, -1, m)
        out = []
        for c in self.coeffs:
            c = c * inv % m
            if c % p ** s:
                raise ArithmeticError("element is not divisible at this precision")
            out.append(c // p ** s)
        return TruncatedElement(self.ctx, out, newprec)

    def val_floor(self) -> Valuation:
        v = self.valuation()
        return v

    def valuation(self) -> Valuation:
        """Exact valuation when determined at this precision, else the floor prec."""
        p, e = self.ctx.p, self.ctx.e
        best = None
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            val = vp(c, p)
            if self.prec is not None and val >= self.prec:
                continue
            cand = Fraction(val) + Fraction(i, e)
            if best is None or cand < best:
                best = cand
        if best is not None:
            return Valuation(best)
        if self.prec is None:
            return INFINITY
        return Valuation(Fraction(self.prec))

    def valuation_is_exact(self) -> bool:
        p = self.ctx.p
        if self.prec is None:
            return True
        return any(c and vp(c, p) < self.prec for c in self.coeffs)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def reduce(self, prec: int) -> "TruncatedElement":
        return TruncatedElement(self.ctx, self.coeffs, _min_prec(self.prec, prec))

    def residue_equal(self, other: "TruncatedElement", prec: int) -> bool:
        m = self.ctx.p ** prec
        return all(_mod_rational(a - b, m, self.ctx.p) == 0 for a, b in zip(self.coeffs, other.coeffs))

    def __eq__(self, other):
        other = self._coerce(other)
        prec = _min_prec(self.prec, other.prec)
        if prec is None:
            return all(Fraction(a) == Fraction(b) for a, b in zip(self.coeffs, other.coeffs))
        return self.residue_equal(other, prec)

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        tag = "exact" if self.prec is None else f"O(p^{self.prec})"
        return f"TruncatedElement({list(self.coeffs)}, {tag})"


def _mod_rational(c, m: int, p: int):
    if isinstance(c, Fraction):
        if c.denominator % p == 0:
            raise ArithmeticError("denominator divisible by p")
        return c.numerator * pow(c.denominator, -1, m) % m
    return c % m


def _min_prec(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _floor_int(v: Valuation) -> int:
    if v.is_infinite:
        return 10 ** 9
    return v.value.numerator // v.value.denominator


def valuation(x: TruncatedElement) -> Valuation:
    return x.valuation()


def teichmuller_int(p: int, a: int, K: int) -> int:
    """Integer representative of the Teichmuller lift of a, modulo p^K."""
    if a % p == 0:
        raise ValueError(f"{a} is not a unit mod {p}")
    m = p ** K
    if p == 2:
        return 1
    x = a % m
    for _ in range(K):
        x = pow(x, p, m)
    return x


def tame_sign_int(p: int, a: int, K: int) -> int:
    """Root of unity of order dividing phi(q) congruent to a mod q."""
    if p == 2:
        if a % 2 == 0:
            raise ValueError(f"{a} is not a unit mod 2")
        return 1 if a % 4 == 1 else (2 ** K - 1)
    return teichmuller_int(p, a, K)


def teichmuller(ctx: CycloContext, a: int) -> TruncatedElement:
    if gcd(a, ctx.p) != 1:
        raise ValueError(f"{a} is not a unit mod {ctx.p}")
    return ctx.element(teichmuller_int(ctx.p, a, ctx.K), ctx.K)


def one_unit_part(p: int, a: int, K: int) -> int:
    """<a> = a / (root of unity of order phi(q)), modulo p^K."""
    m = p ** K
    return a * pow(tame_sign_int(p, a, K), -1, m) % m


def log_one_unit(p: int, u: int, K: int) -> int:
    """p-adic log of the one-unit u (u = 1 mod q), returned modulo p^K.

    The series terms x^k/k lose v_p(k) digits each, so the input is kept with
    K + ceil(K/(p-1)) guard digits.
    """
    q = 4 if p == 2 else p
    if (u - 1) % q:
        raise ValueError("argument is not congruent to 1 mod q")
    guard = K + ceil(K / (p - 1)) + 2
    x = (u - 1) % p ** guard
    if x == 0:
        return 0
    vx = vp(x, p)
    mod = p ** K
    acc = 0
    k = 1
    power = x
    # terms with k*vx - v_p(k) >= K vanish mod p^K; v_p(k) <= log_p(k)
    while k * vx - (k.bit_length() - 1) < K + guard:
        lost = vp(k, p)
        term = power // p ** lost
        term = term * pow(k // p ** lost, -1, mod) % mod
        acc += term if k % 2 else -term
        k += 1
        power *= x
    return acc % mod


def exp_int(p: int, x: int, K: int) -> int:
    """exp(x) modulo p^K for x in q Z_p."""
    q = 4 if p == 2 else p
    if x % q:
        raise ValueError("exp only converges on q Z_p here")
    if x == 0:
        return 1
    vx = vp(x, p)
    mod = p ** K
    acc = 0
    k = 0
    power = 1
    fact = 1
    while True:
        vfact = vp(fact, p)
        if k > 0 and k * vx - vfact >= K and k * (vx - Fraction(1, p - 1)) >= K:
            break
        acc += (power // p ** vfact) * pow(fact // p ** vfact, -1, mod)
        k += 1
        power *= x
        fact *= k
    return acc % mod


@dataclass(frozen=True)
class WildCharacter:
    """Finite-order character of the one-units, fixed by chi(exp(q)) = zeta_order^k."""

    p: int
    conductor: int
    k: int = 1

    @property
    def order(self) -> int:
        if self.p == 2:
            return 2 ** max(self.conductor - 2, 0)
        return self.p ** max(self.conductor - 1, 0)

    @property
    def is_trivial(self) -> bool:
        return self.order == 1 or self.k % self.order == 0


def wild_exponent(chi: WildCharacter, u: int, K: int) -> int:
    """Exponent r with chi(u) = zeta_order^r for a one-unit u."""
    if chi.is_trivial:
        return 0
    p = chi.p
    q = 4 if p == 2 else p
    digits = vp(chi.order, p) + vp(q, p) + 1
    lg = log_one_unit(p, u, max(K, digits))
    y = lg // q if lg % q == 0 else None
    if y is None:
        raise ArithmeticError("log of a one-unit is not divisible by q")
    return chi.k * y % chi.order


def eval_wild_char(ctx: CycloContext, chi: WildCharacter, u) -> TruncatedElement:
    if chi.conductor < 1:
        raise ValueError("conductor must be >= 1")
    if chi.p != ctx.p:
        raise ValueError("character and context disagree on p")
    if ctx.root_order % chi.order:
        raise ValueError("conductor exceeds the context's wild level")
    if isinstance(u, TruncatedElement):
        if any(c for c in u.coeffs[1:]):
            raise ValueError("only one-units of Z_p are supported")
        u = u.coeffs[0]
    u = int(u)
    if (u - 1) % ctx.q:
        raise ValueError("argument is not a one-unit")
    r = wild_exponent(chi, u, ctx.K)
    return ctx.zeta(chi.order, r) if chi.order > 1 else ctx.element(1)


@lru_cache(maxsize=None)
def inv_mod(a: int, m: int) -> int:
    return pow(a, -1, m)
