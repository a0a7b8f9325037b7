"""Locally algebraic weights, their coordinates on weight space, conductor
bookkeeping, and the congruence-subgroup shapes attached to a weight."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from .newton import PreconditionError
from .padic import INFINITY, CycloContext, Valuation, vp


@dataclass(frozen=True)
class WeightCharacter:
    """A weight s = (chi_i * x^{t_i}) on the torus.

    conductors[i] is the conductor of chi_i (trivial character: 1).  The wild
    part of chi_i is pinned by wild_k[i]: chi_i(exp q) = zeta^{wild_k[i]} for a
    fixed primitive root of unity of the order dictated by the conductor.  When
    wild_k is omitted the weight only carries conductors, and ratio conductors
    follow the max rule.
    """

    p: int
    t: Tuple[int, ...]
    conductors: Tuple[int, ...]
    tame: Tuple[int, ...] = ()
    wild_k: Optional[Tuple[int, ...]] = None
    last_trivial: bool = True

    def __post_init__(self):
        n = len(self.t)
        if n < 1:
            raise PreconditionError("rank must be positive")
        if len(self.conductors) != n:
            raise PreconditionError("need one conductor per torus coordinate")
        if any(c < 1 for c in self.conductors):
            raise PreconditionError("conductors are >= 1")
        if any(self.t[i] < self.t[i + 1] for i in range(n - 1)):
            raise PreconditionError("t must be dominant (nonincreasing)")
        if not self.tame:
            object.__setattr__(self, "tame", tuple([0] * n))
        if len(self.tame) != n:
            raise PreconditionError("need one tame exponent per coordinate")
        if self.last_trivial and (self.conductors[-1] != 1 or self.tame[-1] % tame_order(self.p)):
            object.__setattr__(self, "last_trivial", False)
        if self.wild_k is not None:
            if len(self.wild_k) != n:
                raise PreconditionError("need one wild exponent per coordinate")
            for c, k, tm in zip(self.conductors, self.wild_k, self.tame):
                order = wild_order(self.p, c)
                if order > 1 and k % self.p == 0:
                    raise PreconditionError("wild exponent must be a unit for conductor > tame level")
                if _conductor_from_data(self.p, tm, order) != c:
                    raise PreconditionError("conductor disagrees with the character data")
        elif self.p == 2:
            for c, tm in zip(self.conductors, self.tame):
                if c == 1 and tm % 2:
                    raise PreconditionError("a nontrivial tame character of Z_2^x has conductor >= 2")

    @property
    def n(self) -> int:
        return len(self.t)

    @property
    def m(self) -> Tuple[int, ...]:
        t = self.t
        return tuple(t[i] - t[i + 1] for i in range(self.n - 1)) + (t[-1],)

    @property
    def explicit(self) -> bool:
        return self.wild_k is not None

    @property
    def max_conductor(self) -> int:
        return max(self.conductors)

    def wild_ks(self) -> Tuple[int, ...]:
        if self.wild_k is not None:
            return self.wild_k
        return tuple(1 if wild_order(self.p, c) > 1 else 0 for c in self.conductors)

    def character_data(self, i: int) -> Tuple[int, Fraction]:
        """(tame exponent, wild angle in Q/Z) of chi_i."""
        order = wild_order(self.p, self.conductors[i])
        k = self.wild_ks()[i]
        return self.tame[i], Fraction(k, order) % 1

    def to_json(self) -> dict:
        out = {"n": self.n, "p": self.p, "t": list(self.t), "conductors": list(self.conductors),
               "tame": list(self.tame)}
        if self.wild_k is not None:
            out["wild_k"] = list(self.wild_k)
        return out


def wild_order(p: int, conductor: int) -> int:
    """Order of chi(exp q) for a character of the given conductor."""
    if p == 2:
        return 2 ** max(conductor - 2, 0)
    return p ** max(conductor - 1, 0)


def tame_order(p: int) -> int:
    return 2 if p == 2 else p - 1


def _conductor_from_data(p: int, tame: int, order: int) -> int:
    if order > 1:
        return (vp(order, p) + 2) if p == 2 else (vp(order, p) + 1)
    if p == 2 and tame % 2:
        return 2
    return 1


def ratio_conductor(w: WeightCharacter, i: int, j: int, rule: str = "auto") -> int:
    """Conductor of chi_i / chi_j.

    rule "max" uses max(c_i, c_j); "data" reads the explicit characters;
    "auto" reads the characters when they are explicit and falls back to max.
    """
    if rule == "max" or (rule == "auto" and not w.explicit):
        return max(w.conductors[i], w.conductors[j])
    if not w.explicit and rule == "data":
        raise PreconditionError("ratio conductors from data need explicit wild exponents")
    ti, ai = w.character_data(i)
    tj, aj = w.character_data(j)
    angle = (ai - aj) % 1
    tame_diff = (ti - tj) % tame_order(w.p)
    return _conductor_from_data(w.p, tame_diff, angle.denominator)


def ratio_conductors(w: WeightCharacter, rule: str = "auto") -> Dict[Tuple[int, int], int]:
    return {(i, j): ratio_conductor(w, i, j, rule)
            for i in range(w.n) for j in range(w.n) if i != j}


# -- coordinates on weight space --------------------------------------------------


def t_coordinates(w: WeightCharacter, ctx: Optional[CycloContext] = None) -> List[Valuation]:
    """Valuations of T_i = s(1,..,exp(q),..,1) - 1 for each coordinate i.

    A character of conductor c with nontrivial wild part sends exp(q) to a root
    of unity zeta of order > 1 and v(T_i) = v(zeta - 1) = q/(p^{c-1}(p-1)).
    Otherwise T_i = exp(q t_i) - 1 with valuation v(q t_i).
    """
    p = w.p
    if ctx is not None:
        if ctx.p != p:
            raise PreconditionError("context prime differs from the weight's prime")
        top = ctx.wild_level + (2 if p == 2 else 1)
        if w.max_conductor > top:
            raise PreconditionError("conductor exceeds the context's wild level")
    q = 4 if p == 2 else p
    out = []
    ks = w.wild_ks()
    for ti, c, k in zip(w.t, w.conductors, ks):
        order = wild_order(p, c)
        if order > 1 and k % order:
            out.append(Valuation(Fraction(q, p ** (c - 1) * (p - 1))))
        elif ti == 0:
            out.append(INFINITY)
        else:
            out.append(Valuation(Fraction(vp(ti * q, p))))
    return out


def min_t_valuation(w: WeightCharacter) -> Valuation:
    vals = t_coordinates(w)
    if w.last_trivial and w.n > 1:
        vals = vals[:-1]
    return min(vals)


# -- congruence subgroup shapes ---------------------------------------------------


@dataclass
class RocheData:
    n: int
    c_matrix: List[List[int]]
    j_index: int
    j_formula: int
    group_condition_failures: List[Tuple[int, int, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"n": self.n, "c_matrix": self.c_matrix, "j_index": self.j_index,
                "j_formula": self.j_formula,
                "group_condition_ok": not self.group_condition_failures,
                "group_condition_failures": [list(x) for x in self.group_condition_failures]}


def group_condition_failures(c: Sequence[Sequence[int]]) -> List[Tuple[int, int, int]]:
    n = len(c)
    bad = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if c[i][j] > c[i][k] + c[k][j]:
                    bad.append((i + 1, j + 1, k + 1))
    return bad


def roche_subgroup(w: WeightCharacter, rule: str = "auto") -> RocheData:
    """Level matrix of the subgroup J to which the torus character extends.

    Above the diagonal c_ij = floor(cond/2), below floor((cond+1)/2), where
    cond is the conductor of chi_i/chi_j.  The index of J in the Iwahori group
    is p^j_index.  A failed group condition is reported, never repaired.
    """
    n = w.n
    conds = ratio_conductors(w, rule)
    c = [[0] * n for _ in range(n)]
    for (i, j), cond in conds.items():
        c[i][j] = cond // 2 if i < j else (cond + 1) // 2
    j_matrix = sum(c[i][j] for i in range(n) for j in range(n) if i < j) + \
        sum(c[i][j] - 1 for i in range(n) for j in range(n) if i > j)
    others = sorted(normalized_conductors(w, rule))
    j_formula = sum((i + 1) * ci for i, ci in enumerate(others)) - n * (n - 1) // 2
    return RocheData(n, c, j_matrix, j_formula, group_condition_failures(c))


def normalized_conductors(w: WeightCharacter, rule: str = "auto") -> List[int]:
    """Conductors of chi_i / chi_n for i < n (the chi_i themselves when chi_n is trivial)."""
    if w.last_trivial:
        return list(w.conductors[:-1])
    return [ratio_conductor(w, i, w.n - 1, rule) for i in range(w.n - 1)]


def is_simple(w: WeightCharacter, rule: str = "auto") -> Tuple[bool, List[str]]:
    """Both simplicity conditions, with a description of each failure."""
    n = w.n
    fails = []
    for i in range(n):
        for j in range(n):
            if i != j:
                rc = ratio_conductor(w, i, j, rule)
                if rc != max(w.conductors[i], w.conductors[j]):
                    fails.append(f"condition 1: cond(chi_{i+1}/chi_{j+1}) = {rc} is not the max")
    normalized = normalized_conductors(w, rule)
    for i in range(n - 1):
        for j in range(n - 1):
            if i != j and not normalized[i] < 2 * normalized[j]:
                fails.append(f"condition 2: cond(chi_{i+1}) = {normalized[i]} >= 2*cond(chi_{j+1})")
    return not fails, fails


def half_to_full(n: int, half: Dict[Tuple[int, int], int]) -> List[List[int]]:
    c = [[0] * n for _ in range(n)]
    for (i, j), v in half.items():
        c[i - 1][j - 1] = v
    return c


def half_from_list(n: int, values: Sequence[int]) -> Dict[Tuple[int, int], int]:
    """Entries (c_21, c_31, c_32, c_41, ...) row by row below the diagonal."""
    idx = [(i, j) for i in range(2, n + 1) for j in range(1, i)]
    if len(values) != len(idx):
        raise PreconditionError(f"expected {len(idx)} entries below the diagonal")
    return dict(zip(idx, values))


def shape_predicates(n: int, half: Dict[Tuple[int, int], int], conds: Sequence[int]) -> dict:
    """Shape tests for a lower-triangular level tuple (keys (i, j), i > j, 1-based)."""
    def get(i, j):
        return half.get((i, j), 0) if i > j else 0

    group = all(get(i, j) <= get(i, k) + get(k, j)
                for i in range(1, n + 1) for j in range(1, i) for k in range(1, n + 1))
    analytic = True
    for j in range(1, n):
        col = [get(i, j) for i in range(j + 1, n + 1)]
        if len(set(col)) > 1:
            analytic = False
        if j + 1 < n and get(n, j) < get(n, j + 1):
            analytic = False
    compatible = True
    for j in range(1, n + 1):
        entries = [get(k, l) for l in range(1, j + 1) for k in range(l + 1, n + 1)]
        if entries and conds[j - 1] > min(entries):
            compatible = False
    rowcol = True
    for i in range(1, n + 1):
        entries = [get(i, j) for j in range(1, i)] + [get(j, i) for j in range(i + 1, n + 1)]
        if entries and conds[i - 1] > min(entries):
            rowcol = False
    return {"group_shaped": group, "analytic_shaped": analytic, "compatible": compatible,
            "compatible_rowcol": rowcol}


def forced_radius(conds: Sequence[int]) -> Dict[Tuple[int, int], int]:
    """Least analytic-shaped level tuple compatible with the given conductors.

    Column j must dominate every conductor c_k with k >= j once columns are
    constant and nonincreasing, so the column value is max_{k>=j} c_k.
    """
    n = len(conds)
    half = {}
    for j in range(1, n):
        val = max(conds[j - 1:])
        for i in range(j + 1, n + 1):
            half[(i, j)] = val
    return half


def explicit_weights(p: int, n: int, max_cond: int) -> List[WeightCharacter]:
    """All explicit weights with t = 0, last coordinate trivial, conductors <= max_cond."""
    out = []
    tord = tame_order(p)
    options = []
    for c in range(1, max_cond + 1):
        order = wild_order(p, c)
        ks = [k for k in range(order) if k % p] if order > 1 else [0]
        for tm in range(tord):
            if _conductor_from_data(p, tm, order) != c:
                continue
            for k in ks:
                options.append((c, tm, k))
    for combo in product(options, repeat=n - 1):
        conds = tuple(x[0] for x in combo) + (1,)
        tame = tuple(x[1] for x in combo) + (0,)
        ks = tuple(x[2] for x in combo) + (0,)
        out.append(WeightCharacter(p, tuple([0] * n), conds, tame, ks))
    return out

