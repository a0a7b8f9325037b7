"""Dimensions, eigenvalue bookkeeping, classicality, and a finite-group
irreducibility test for representations induced from a torus character."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations, product
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

from .newton import PreconditionError
from .padic import Valuation
from .weights import WeightCharacter, roche_subgroup, tame_order, wild_order


def weyl_dim(t: Sequence[int]) -> int:
    """Dimension of the irreducible GL_n representation of highest weight t."""
    n = len(t)
    if any(t[i] < t[i + 1] for i in range(n - 1)):
        raise PreconditionError("t must be dominant")
    num, den = 1, 1
    for i in range(n):
        for j in range(i + 1, n):
            num *= t[i] - t[j] + j - i
            den *= j - i
    return num // den


def delta_half_exponents(n: int) -> List[Fraction]:
    return [Fraction(n - 1, 2) - i for i in range(n)]


def lambda_shift(n: int, m: Sequence[int], i: int) -> Fraction:
    """Exponent E_i with lambda_i = p^{E_i} psi_i(p), for 1-based i."""
    return Fraction(n - 1, 2) - i + 1 - sum(m[n - i:])


def _check_diffs(n: int, m: Sequence[int]) -> List[int]:
    m = list(m)
    if len(m) == n - 1:
        m = m + [0]
    if len(m) != n:
        raise PreconditionError(f"expected {n} successive differences")
    if any(x < 0 for x in m[:-1]):
        raise PreconditionError("differences must be nonnegative")
    return m


@dataclass
class SlopeBudget:
    a: Tuple[int, ...]
    m: Tuple[int, ...]
    value: Fraction
    closed_form: Fraction
    per_w: Dict[Tuple[int, ...], Fraction] = field(default_factory=dict)
    lambda_product_valuation: Fraction = Fraction(0)

    @property
    def mismatch(self) -> Fraction:
        return self.closed_form - self.value

    def to_json(self) -> dict:
        from .padic import fmt_rational
        return {
            "a": list(self.a), "m": list(self.m),
            "value": fmt_rational(self.value),
            "closed_form": fmt_rational(self.closed_form),
            "mismatch": fmt_rational(self.mismatch),
            "lambda_product_valuation": fmt_rational(self.lambda_product_valuation),
            "per_w": [[list(w), fmt_rational(v)] for w, v in sorted(self.per_w.items())],
        }


def slope_budget(n: int, a: Sequence[int], m: Sequence[int],
                 psi_vals: Optional[Sequence] = None) -> SlopeBudget:
    """Sum over all orderings w of the valuation of the U_p^a eigenvalue of x^w.

    Each companion has v(eigenvalue) = sum_i a_{n-i+1} (E_i + v(psi_{w(i)})).
    Without psi_vals the psi valuations are pinned by prod lambda_i = 1, which
    forces their sum to be sum_j j*m_j; any distribution with that sum gives
    the same total, so (sum_j j*m_j, 0, ..., 0) is used.
    """
    a = list(a)
    if len(a) != n or any(a[i] < a[i + 1] for i in range(n - 1)):
        raise PreconditionError("a must be nonincreasing of length n")
    m = _check_diffs(n, m)
    weighted = sum((j + 1) * m[j] for j in range(n))
    if psi_vals is None:
        psi = [Fraction(weighted)] + [Fraction(0)] * (n - 1)
    else:
        psi = [Fraction(v.value if isinstance(v, Valuation) else v) for v in psi_vals]
        if len(psi) != n:
            raise PreconditionError("need n psi valuations")
    shifts = [lambda_shift(n, m, i) for i in range(1, n + 1)]
    per_w = {}
    for w in permutations(range(n)):
        per_w[tuple(x + 1 for x in w)] = sum(
            a[n - i] * (shifts[i - 1] + psi[w[i - 1]]) for i in range(1, n + 1))
    value = sum(per_w.values(), Fraction(0))
    closed = factorial(n - 1) * (
        sum(a[n - i] * (Fraction(n - 1, 2) - i + 1) for i in range(1, n + 1))
        - sum(m[j - 1] * sum(a[:j]) for j in range(1, n + 1))
        + weighted * sum(a))
    lam_prod = sum(shifts) + sum(psi)
    return SlopeBudget(tuple(a), tuple(m), value, closed, per_w, lam_prod)


def lambda_psi_convert(n: int, m: Sequence[int], values: Sequence, direction: str) -> List[Valuation]:
    """Shift valuations between lambda_i and psi_i(p) (direction 'psi_to_lambda' or back)."""
    m = _check_diffs(n, m)
    if len(values) != n:
        raise PreconditionError("need n values")
    vals = [v if isinstance(v, Valuation) else Valuation.from_json(v) if isinstance(v, str)
            else Valuation.of(v) for v in values]
    if any(v.is_infinite for v in vals):
        raise PreconditionError("a zero eigenvalue has infinite slope")
    sign = {"psi_to_lambda": 1, "lambda_to_psi": -1}.get(direction)
    if sign is None:
        raise PreconditionError(f"unknown direction {direction!r}")
    return [Valuation(v.value + sign * lambda_shift(n, m, i + 1)) for i, v in enumerate(vals)]


def classicality_check(lambda_vals: Sequence, t: Sequence[int]) -> bool:
    """Small-slope test: v(lambda_1 ... lambda_i) < t_i - t_{i+1} + 1 for i < n."""
    n = len(t)
    if any(t[i] < t[i + 1] for i in range(n - 1)):
        raise PreconditionError("t must be dominant")
    total = Fraction(0)
    for i in range(n - 1):
        v = lambda_vals[i]
        v = v if isinstance(v, Valuation) else Valuation.of(v)
        if v.is_infinite:
            return False
        total += v.value
        if not total < t[i] - t[i + 1] + 1:
            return False
    return True


# -- finite-group induction ---------------------------------------------------------


def _matmul(x, y, n, mod):
    return tuple(sum(x[i * n + k] * y[k * n + j] for k in range(n)) % mod
                 for i in range(n) for j in range(n))


def _matinv(x, n, mod):
    """Inverse of a matrix with unit determinant modulo a prime power."""
    a = [list(x[i * n:(i + 1) * n]) + [int(i == j) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] % _prime_of(mod)), None)
        if piv is None:
            raise ArithmeticError("matrix is not invertible")
        a[col], a[piv] = a[piv], a[col]
        inv = pow(a[col][col], -1, mod)
        a[col] = [v * inv % mod for v in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [(u - f * v) % mod for u, v in zip(a[r], a[col])]
    return tuple(a[i][n + j] for i in range(n) for j in range(n))


_PRIME_CACHE: Dict[int, int] = {}


def _prime_of(mod: int) -> int:
    if mod not in _PRIME_CACHE:
        d = 2
        while mod % d:
            d += 1
        _PRIME_CACHE[mod] = d
    return _PRIME_CACHE[mod]


def _primitive_root(p: int, C: int) -> int:
    mod = p ** C
    order = (p - 1) * p ** (C - 1)
    factors = {p} if C > 1 else set()
    x, d = p - 1, 2
    while x > 1:
        if x % d == 0:
            factors.add(d)
            x //= d
        else:
            d += 1
    for g in range(2, mod):
        if g % p and all(pow(g, order // f, mod) != 1 for f in factors):
            return g
    return 1


@dataclass
class MackeyResult:
    irreducible: bool
    intertwiner_dim: int
    induced_dim: int
    double_cosets: int
    constructible: bool
    c_matrix: List[List[int]]

    def to_json(self) -> dict:
        return {"irreducible": self.irreducible, "intertwiner_dim": self.intertwiner_dim,
                "induced_dim": self.induced_dim, "double_cosets": self.double_cosets,
                "constructible": self.constructible, "c_matrix": self.c_matrix}


def character_exponents(w: WeightCharacter, C: int) -> List[int]:
    """Exponents m_i with chi_i(x) = zeta^{m_i dlog x}, zeta of order phi(p^C).

    A tame exponent factors through (Z/p)^x, a wild character of conductor c
    has order p^{c-1} and factors through (Z/p^c)^x.
    """
    p = w.p
    order = (p - 1) * p ** (C - 1)
    ks = w.wild_ks()
    out = []
    for tm, c, k in zip(w.tame, w.conductors, ks):
        val = tm * p ** (C - 1)
        if wild_order(p, c) > 1:
            val += k * (p - 1) * p ** (C - c)
        out.append(val % order)
    return out


def mackey_bruteforce(w: WeightCharacter, rule: str = "auto", budget: int = 10 ** 7,
                      seed: int = 0) -> MackeyResult:
    """Decide irreducibility of Ind_J^{Iw}(chi) on the finite quotient Iw / Gamma(p^C).

    Double cosets J r J come from J-orbits on Iw/J; the Mackey term for r is 1
    exactly when chi and its conjugate by r agree on the stabilizer J cap rJr^-1,
    which is generated by Schreier generators of the orbit.
    """
    p, n = w.p, w.n
    if p == 2:
        raise PreconditionError("the finite-group test needs an odd prime")
    C = max(w.conductors)
    mod = p ** C
    phi = (p - 1) * p ** (C - 1)
    roche = roche_subgroup(w, rule)
    c = roche.c_matrix
    gamma = _primitive_root(p, C)
    dlog = {}
    x = 1
    for k in range(phi):
        dlog[x] = k
        x = x * gamma % mod
    expo = character_exponents(w, C)

    def chi(g):
        return sum(expo[i] * dlog[g[i * n + i]] for i in range(n)) % phi

    def in_j(g):
        return all(g[i * n + j] % p ** c[i][j] == 0 for i in range(n) for j in range(n) if i != j)

    ident = tuple(int(i == j) for i in range(n) for j in range(n))

    def elem(i, j, v):
        e = list(ident)
        e[i * n + j] = v % mod
        return tuple(e)

    def diag(i, v):
        e = list(ident)
        e[i * n + i] = v % mod
        return tuple(e)

    j_gens = [diag(i, gamma) for i in range(n)]
    j_gens += [elem(i, j, p ** c[i][j]) for i in range(n) for j in range(n) if i != j]

    lower = [(i, j) for i in range(n) for j in range(n) if i > j]
    upper = [(i, j) for i in range(n) for j in range(n) if i < j]
    reps = []
    for lv in product(*[range(p ** (c[i][j] - 1)) for i, j in lower]):
        nbar = list(ident)
        for (i, j), v in zip(lower, lv):
            nbar[i * n + j] = p * v % mod
        for uv in product(*[range(p ** c[i][j]) for i, j in upper]):
            nn = list(ident)
            for (i, j), v in zip(upper, uv):
                nn[i * n + j] = v
            reps.append(_matmul(tuple(nbar), tuple(nn), n, mod))
    index = len(reps)
    if index * index * len(j_gens) > budget:
        raise PreconditionError("enumeration exceeds the budget")
    inv_reps = [_matinv(r, n, mod) for r in reps]
    for a in range(index):
        for b in range(a + 1, index):
            if in_j(_matmul(inv_reps[a], reps[b], n, mod)):
                raise ArithmeticError("coset representatives are not distinct")

    def coset_of(g):
        for idx, ri in enumerate(inv_reps):
            if in_j(_matmul(ri, g, n, mod)):
                return idx
        raise ArithmeticError("element outside every coset")

    constructible = _is_character_on_j(chi, in_j, j_gens, c, p, n, C, mod, budget, seed)

    seen = [False] * index
    dim = 0
    n_double = 0
    for start in range(index):
        if seen[start]:
            continue
        n_double += 1
        trans = {start: ident}
        queue = [start]
        seen[start] = True
        stab_gens = []
        while queue:
            x = queue.pop()
            tx = trans[x]
            for s in j_gens:
                moved = _matmul(s, reps[x], n, mod)
                y = coset_of(moved)
                sty = _matmul(s, tx, n, mod)
                if y not in trans:
                    trans[y] = sty
                    seen[y] = True
                    queue.append(y)
                else:
                    stab_gens.append(_matmul(_matinv(trans[y], n, mod), sty, n, mod))
        r = _matmul(trans[start], reps[start], n, mod)
        r_inv = _matinv(r, n, mod)
        agree = True
        for h in stab_gens:
            conj = _matmul(_matmul(r_inv, h, n, mod), r, n, mod)
            if not in_j(conj) or not in_j(h):
                raise ArithmeticError("stabilizer element escaped J")
            if chi(h) != chi(conj):
                agree = False
                break
        if agree:
            dim += 1
    return MackeyResult(constructible and dim == 1, dim, index, n_double, constructible, c)


def _is_character_on_j(chi, in_j, j_gens, c, p, n, C, mod, budget, seed) -> bool:
    """Check chi(g s) = chi(g) chi(s) for g in J (all of J when small) and generators s."""
    phi = (p - 1) * p ** (C - 1)
    units = [x for x in range(mod) if x % p]
    offd = [(i, j) for i in range(n) for j in range(n) if i != j]
    size = len(units) ** n
    for i, j in offd:
        size *= p ** (C - c[i][j])
    if size * len(j_gens) <= min(budget, 2 * 10 ** 5):
        def elements():
            for dv in product(units, repeat=n):
                for ov in product(*[range(0, mod, p ** c[i][j]) for i, j in offd]):
                    g = [0] * (n * n)
                    for i in range(n):
                        g[i * n + i] = dv[i]
                    for (i, j), v in zip(offd, ov):
                        g[i * n + j] = v
                    yield tuple(g)
    else:
        rng = random.Random(seed)

        def elements():
            for _ in range(2000):
                g = [0] * (n * n)
                for i in range(n):
                    g[i * n + i] = rng.choice(units)
                for i, j in offd:
                    g[i * n + j] = rng.randrange(0, mod, p ** c[i][j])
                yield tuple(g)
    for g in elements():
        if not in_j(g):
            continue
        for s in j_gens:
            if chi(_matmul(g, s, n, mod)) != (chi(g) + chi(s)) % phi:
                return False
    return True


# -- oracles used by the test-suite and the dims command ------------------------------


def gelfand_tsetlin_count(t: Sequence[int]) -> int:
    """Number of Gelfand-Tsetlin patterns with top row t."""
    counts = {tuple(t): 1}
    for _ in range(len(t) - 1):
        nxt: Dict[tuple, int] = {}
        for row, k in counts.items():
            ranges = [range(row[i + 1], row[i] + 1) for i in range(len(row) - 1)]
            for below in product(*ranges):
                nxt[below] = nxt.get(below, 0) + k
        counts = nxt
    return sum(counts.values())


def column_chain_count(t: Sequence[int]) -> int:
    """Semistandard tableaux of shape t counted as chains of column subsets.

    Columns are subsets of {1..n}; reading left to right, each column sits
    below the next one in the componentwise order on sorted entries, and the
    shape has t_k - t_{k+1} columns of height k.
    """
    n = len(t)
    t = [x - t[-1] for x in t]
    heights = []
    for k in range(n, 0, -1):
        heights += [k] * (t[k - 1] - (t[k] if k < n else 0))
    subsets = {}
    for k in set(heights):
        subsets[k] = list(combinations(range(1, n + 1), k))
    if not heights:
        return 1
    ways = {s: 1 for s in subsets[heights[0]]}
    for h in heights[1:]:
        nxt: Dict[tuple, int] = {}
        for s in subsets[h]:
            total = sum(v for prev, v in ways.items() if all(prev[i] <= s[i] for i in range(h)))
            if total:
                nxt[s] = total
        ways = nxt
    return sum(ways.values())
