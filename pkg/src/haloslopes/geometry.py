"""Slope-lattice certificates for pieces of the spectral variety near the
boundary of weight space, and the degree of the ordinary locus."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import List, Optional, Sequence, Tuple

from .newton import NewtonPolygon, PreconditionError, lower_hull
from .padic import Valuation, fmt_rational

SCOPE_NOTE = ("formula-level certificate: only the trapping of small slopes in a finite "
              "lattice is checked, not connectedness of any analytic space")


@dataclass
class DisconnectCertificate:
    alpha: Fraction
    n: int
    A1: Fraction
    d_alpha: Fraction
    nu_alpha: Fraction
    lattice: List[Fraction] = field(default_factory=list)
    gap: Optional[Fraction] = None

    def contains(self, ratio: Fraction) -> bool:
        return Fraction(ratio) in set(self.lattice)

    def to_json(self) -> dict:
        return {
            "alpha": fmt_rational(self.alpha), "n": self.n, "A1": fmt_rational(self.A1),
            "d_alpha": fmt_rational(self.d_alpha),
            "nu_alpha": fmt_rational(self.nu_alpha), "nu_is_strict": True,
            "lattice": [fmt_rational(x) for x in self.lattice],
            "gap": None if self.gap is None else fmt_rational(self.gap),
            "scope": SCOPE_NOTE,
        }


def disconnect_certificate(alpha, n: int, A1) -> DisconnectCertificate:
    """d(alpha) solves alpha x = A_1 x^(1 + 2/(n(n-1))), so d = (alpha/A_1)^(n(n-1)/2).

    The lattice holds (l_j - l_i)/(j - i) for integers 0 <= l_i <= l_j <= alpha d
    and 1 <= j - i <= d.
    """
    alpha, A1 = Fraction(alpha), Fraction(A1)
    if alpha <= 0:
        raise PreconditionError("alpha must be positive")
    if A1 <= 0:
        raise PreconditionError("A_1 must be positive")
    if n < 2:
        raise PreconditionError("n must be at least 2")
    d = (alpha / A1) ** (n * (n - 1) // 2)
    nu = 1 / (alpha * d)
    top = floor(alpha * d)
    width = floor(d)
    lattice = sorted({Fraction(num, den) for den in range(1, width + 1) for num in range(top + 1)})
    others = [abs(alpha - x) for x in lattice if x != alpha]
    return DisconnectCertificate(alpha, n, A1, d, nu, lattice, min(others) if others else None)


def trapped_slopes(poly: NewtonPolygon, vTa, cert: DisconnectCertificate) -> Tuple[bool, List[Fraction]]:
    """Every slope s with s/v(T_a) < alpha must have s/v(T_a) in the lattice.

    Returns (ok, offending ratios).
    """
    vTa = Fraction(vTa)
    bad = []
    for s, _ in poly.slopes:
        ratio = s / vTa
        if ratio < cert.alpha and not cert.contains(ratio):
            bad.append(ratio)
    return not bad, bad


def ordinary_degree(c_vals: Sequence) -> int:
    """Largest N with v(c_N) = 0."""
    vals = [v if isinstance(v, Valuation) else Valuation.from_json(v) if isinstance(v, str)
            else Valuation.of(v) for v in c_vals]
    if not vals or vals[0] != Valuation.of(0):
        raise PreconditionError("c_0 must be a unit")
    return max(N for N, v in enumerate(vals) if v == Valuation.of(0))


def slope_zero_multiplicity(c_vals: Sequence) -> int:
    vals = [v if isinstance(v, Valuation) else Valuation.of(v) for v in c_vals]
    poly = lower_hull(enumerate(vals))
    return sum(m for s, m in poly.slopes if s == 0)
