"""U_p^a on truncated spaces of locally analytic forms over synthetic global
data, and the characteristic series of the truncated operator."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

from .iwahori import (CharacterNotConstant, Series, TorusCharacter, _local_powers, all_balls,
                      check_iwahori, int_matinv, lower_positions, monomials, pullback_through,
                      upper_unipotent)
from .newton import NewtonPolygon, PreconditionError, lower_hull
from .padic import INFINITY, CycloContext, TruncatedElement, Valuation, vp
from .weights import WeightCharacter


class CertificationError(RuntimeError):
    """The requested coefficients cannot be certified at this truncation."""


# -- coset representatives ----------------------------------------------------------


def coset_reps(n: int, p: int, a: Sequence[int]) -> List[Tuple[Dict[Tuple[int, int], int], List[List[int]]]]:
    """Left cosets of the Iwahori group in Iw u^a Iw.

    Representatives are n(x) u^a with n(x) upper unipotent and x_ij running
    over residues mod p^{a_i - a_j} for i < j, in lexicographic order.
    Returns (x, matrix) pairs.
    """
    a = list(a)
    if len(a) != n or any(a[i] < a[i + 1] for i in range(n - 1)):
        raise PreconditionError("a must be nonincreasing of length n")
    upper = [(i, j) for i in range(n) for j in range(i + 1, n)]
    out = []
    for vals in product(*[range(p ** (a[i] - a[j])) for i, j in upper]):
        x = dict(zip(upper, vals))
        nx = upper_unipotent(n, x)
        mat = [[nx[i][j] * p ** a[j] for j in range(n)] for i in range(n)]
        out.append((x, mat))
    return out


def in_iwahori(m, p: int) -> bool:
    n = len(m)
    for i in range(n):
        for j in range(n):
            v = Fraction(m[i][j])
            if v.denominator % p == 0:
                return False
            if i > j and v and vp(v, p) < 1:
                return False
    from .iwahori import determinant
    det = Fraction(determinant([[Fraction(v) for v in r] for r in m]))
    return det != 0 and vp(det, p) == 0


def distinct_cosets(mats, p: int) -> bool:
    """Pairwise zeta_i^{-1} zeta_j outside the Iwahori group (exact rationals)."""
    invs = [int_matinv(m) for m in mats]
    n = len(mats[0]) if mats else 0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            prod = [[sum(invs[i][r][k] * mats[j][k][c] for k in range(n)) for c in range(n)] for r in range(n)]
            if in_iwahori(prod, p):
                return False
    return True


def lower_translates(n: int, p: int, a: Sequence[int]):
    """The translates N-bar(p b) u^a with b_ij mod p^{a_j - a_i}; kept for comparison."""
    lower = lower_positions(n)
    out = []
    for vals in product(*[range(p ** (a[j] - a[i])) for i, j in lower]):
        m = [[int(i == j) for j in range(n)] for i in range(n)]
        for (i, j), v in zip(lower, vals):
            m[i][j] = p * v
        out.append([[m[i][j] * p ** a[j] for j in range(n)] for i in range(n)])
    return out


# -- synthetic global data --------------------------------------------------------------


@dataclass
class GlueEntry:
    target: int
    twist: Optional[List[List[int]]]


@dataclass
class GlobalData:
    """h components; for each (coset rep, component) a target component and a
    twist matrix in the Iwahori group.  rep = None applies to every rep."""

    h: int = 1
    entries: Dict[Tuple[Optional[int], int], GlueEntry] = field(default_factory=dict)
    name: str = "trivial"
    n: Optional[int] = None

    def lookup(self, rep: int, component: int) -> GlueEntry:
        if (rep, component) in self.entries:
            return self.entries[(rep, component)]
        if (None, component) in self.entries:
            return self.entries[(None, component)]
        return GlueEntry(component, None)

    def validate(self, p: int, n: int) -> None:
        if self.h < 1:
            raise PreconditionError("h must be positive")
        if self.n is not None and self.n != n:
            raise PreconditionError(f"global data is for rank {self.n}, weight has rank {n}")
        for (rep, comp), ent in self.entries.items():
            if not (0 <= comp < self.h and 0 <= ent.target < self.h):
                raise PreconditionError("gluing refers to a component outside 0..h-1")
            if ent.twist is not None:
                if len(ent.twist) != n:
                    raise PreconditionError("twist has the wrong size")
                check_iwahori(ent.twist, p)

    @staticmethod
    def from_json(obj: dict) -> "GlobalData":
        try:
            if not isinstance(obj, dict):
                raise TypeError("top level must be an object")
            h = int(obj.get("h", 1))
            rank = obj.get("n")
            entries = {}
            for item in obj.get("gluing", []):
                rep = item.get("rep")
                comp = int(item.get("component", 0))
                target = int(item.get("target", comp))
                twist = item.get("twist")
                if twist is not None:
                    twist = [[int(v) for v in row] for row in twist]
                entries[(None if rep is None else int(rep), comp)] = GlueEntry(target, twist)
            return GlobalData(h, entries, obj.get("name", "custom"), None if rank is None else int(rank))
        except (TypeError, ValueError, AttributeError, KeyError) as exc:
            raise ValueError(f"malformed global data: {exc}") from exc

    def to_json(self) -> dict:
        out = {"name": self.name, "h": self.h, "gluing": []}
        if self.n is not None:
            out["n"] = self.n
        for (rep, comp), ent in sorted(self.entries.items(), key=lambda kv: (kv[0][0] is not None, kv[0])):
            item = {"component": comp, "target": ent.target}
            if rep is not None:
                item["rep"] = rep
            if ent.twist is not None:
                item["twist"] = ent.twist
            out["gluing"].append(item)
        return out


def gallery_dir() -> str:
    return os.path.join(os.path.dirname(__file__), "gallery")


def load_gallery() -> Dict[str, GlobalData]:
    out = {}
    for fn in sorted(os.listdir(gallery_dir())):
        if fn.endswith(".json"):
            with open(os.path.join(gallery_dir(), fn)) as fh:
                g = GlobalData.from_json(json.load(fh))
            g.name = fn[:-5]
            out[g.name] = g
    return out


# -- the truncated operator ---------------------------------------------------------------


@dataclass
class UpMatrix:
    """Matrix of a truncated operator: row = output basis vector, column = input.

    entries[r][c] is a coordinate vector in the character ring, reduced mod
    p^K (or exact rationals when K is None).  Every entry of row r, including
    the columns cut off by truncation, has valuation >= row_floors[r], and
    every excluded basis vector has row floor >= excluded_floor.
    """

    ctx: CycloContext
    basis: List[Tuple[int, Tuple[int, ...], Tuple[int, ...]]]
    entries: List[List[Tuple]]
    K: Optional[int]
    row_floors: List[Fraction]
    excluded_floor: Optional[Fraction] = None
    a: Tuple[int, ...] = ()
    radius: int = 0
    D: int = 0
    pruned: int = 0

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def exact(self) -> bool:
        return self.K is None

    @staticmethod
    def from_rows(rows, p: int, ctx: Optional[CycloContext] = None, K: Optional[int] = None) -> "UpMatrix":
        """A complete (untruncated) operator given by a small matrix of rationals or ring vectors."""
        ctx = ctx or CycloContext(p, 0, K or 20)
        ents = []
        for row in rows:
            out = []
            for v in row:
                if isinstance(v, TruncatedElement):
                    vec = tuple(v.coeffs)
                elif isinstance(v, (tuple, list)):
                    vec = tuple(Fraction(x) for x in v)
                else:
                    vec = (Fraction(v),) + (Fraction(0),) * (ctx.e - 1)
                if K is not None:
                    vec = tuple(_mod(x, p ** K, p) for x in vec)
                out.append(vec)
            ents.append(out)
        floors = []
        for row in ents:
            vals = [_vec_valuation(ctx, vec) for vec in row]
            finite = [v.value for v in vals if not v.is_infinite]
            floors.append(min(finite) if finite else Fraction(10 ** 6))
        basis = [(0, (), (i,)) for i in range(len(rows))]
        return UpMatrix(ctx, basis, ents, K, floors, None)

    def entry(self, r: int, c: int) -> TruncatedElement:
        return TruncatedElement(self.ctx, list(self.entries[r][c]), self.K)

    def is_identity(self) -> bool:
        one = (1,) + (0,) * (self.ctx.e - 1)
        zero = (0,) * self.ctx.e
        return all(tuple(self.entries[r][c]) == (one if r == c else zero)
                   for r in range(self.size) for c in range(self.size))

    def is_diagonal(self) -> bool:
        zero = (0,) * self.ctx.e
        return all(tuple(self.entries[r][c]) == zero
                   for r in range(self.size) for c in range(self.size) if r != c)

    def to_json(self) -> dict:
        return {
            "size": self.size, "K": self.K, "radius": self.radius, "degree_cap": self.D,
            "a": list(self.a), "ring_degree": self.ctx.e, "pruned_balls": self.pruned,
            "basis": [[c, list(b), list(e)] for c, b, e in self.basis],
            "row_floors": [f"{f.numerator}/{f.denominator}" for f in self.row_floors],
            "entries": [[[str(x) for x in vec] for vec in row] for row in self.entries],
        }


def _mod(x, m: int, p: int) -> int:
    x = Fraction(x)
    if x.denominator % p == 0:
        raise PreconditionError("entry is not p-integral")
    return x.numerator * pow(x.denominator, -1, m) % m


def _vec_valuation(ctx: CycloContext, vec) -> Valuation:
    return TruncatedElement(ctx, list(vec)).valuation()


def min_gap(a: Sequence[int]) -> int:
    n = len(a)
    gaps = [a[j] - a[i] for i in range(n) for j in range(i)]
    return min(gaps) if gaps else 0


def _steps_for(n: int, x: Dict[Tuple[int, int], int], a: Sequence[int], twist):
    steps = []
    if any(x.values()):
        neg = {k: -v for k, v in x.items()}
        steps.append(("matrix", upper_unipotent(n, neg)))
    steps.append(("scale", list(a)))
    if twist is not None:
        steps.append(("matrix", twist))
    return steps


def _is_central(a: Sequence[int]) -> bool:
    return len(set(a)) <= 1


def _plan(weight: WeightCharacter, gdata: GlobalData, a: Sequence[int]):
    """(rep index, x, per-component (target, twist)) for every coset representative."""
    n, p = weight.n, weight.p
    reps = coset_reps(n, p, a)
    plan = []
    for idx, (x, _) in enumerate(reps):
        per_comp = []
        for comp in range(gdata.h):
            if _is_central(a):
                per_comp.append((comp, None))
            else:
                ent = gdata.lookup(idx, comp)
                per_comp.append((ent.target, ent.twist))
        plan.append((idx, x, per_comp))
    return plan


def find_radius(weight: WeightCharacter, gdata: GlobalData, a: Sequence[int], K: int = 8,
                max_radius: Optional[int] = None) -> int:
    """Least uniform ball radius on which every term of the operator is analytic."""
    n, p = weight.n, weight.p
    chars = TorusCharacter(weight, K)
    plan = _plan(weight, gdata, a)
    top = max_radius if max_radius is not None else max(weight.conductors) + 1
    for r in range(0, top + 1):
        try:
            for ball in all_balls(n, p, r):
                for _, x, per_comp in plan:
                    for target, twist in per_comp:
                        pullback_through(_steps_for(n, x, a, twist), n, p, ball, r, 1, chars)
            return r
        except PreconditionError:
            continue
    raise PreconditionError("no ball radius up to the conductor makes the operator analytic")


def read_graph(weight, gdata, a, radius, K=8):
    """For each (component, ball): the set of (component, ball) its image reads."""
    n, p = weight.n, weight.p
    chars = TorusCharacter(weight, K)
    plan = _plan(weight, gdata, a)
    graph = {}
    for comp in range(gdata.h):
        for ball in all_balls(n, p, radius):
            reads = set()
            for _, x, per_comp in plan:
                target, twist = per_comp[comp]
                pb = pullback_through(_steps_for(n, x, a, twist), n, p, ball, radius, 0, chars)
                reads.add((target, pb.in_ball))
            graph[(comp, ball)] = reads
    return graph


def prune_unread(graph) -> List:
    """Drop blocks whose columns vanish; the characteristic series is unchanged
    because the matrix is block lower-triangular against them."""
    alive = set(graph)
    while True:
        read = set()
        for node in alive:
            read |= graph[node] & alive
        if read == alive:
            return sorted(alive)
        alive = read


def assemble_up(weight: WeightCharacter, gdata: Optional[GlobalData], a: Sequence[int], D: int, K: int,
                radius: Optional[int] = None, prune: bool = True) -> UpMatrix:
    """Matrix of U_p^a = sum over cosets of (twist) o (n(x) u^a) on the truncated basis.

    On the output ball z = center + p^r w, the term for n(x) u^a and twist u
    sends f to s(b1) s(b2) f(z2) where n(-x) N-bar(z) = N-bar(z1) b1, the
    scaling gives y_ij = p^{a_j - a_i} (z1)_ij, and u N-bar(y) = N-bar(z2) b2.
    """
    gdata = gdata or GlobalData()
    n, p = weight.n, weight.p
    gdata.validate(p, n)
    a = tuple(a)
    if D < 0 or K < 1:
        raise PreconditionError("degree cap must be >= 0 and precision >= 1")
    if radius is None:
        radius = find_radius(weight, gdata, a, K)
    chars = TorusCharacter(weight, K)
    ctx = chars.ctx
    mod = p ** K
    nv = len(lower_positions(n))
    mons = monomials(nv, D)
    graph = read_graph(weight, gdata, a, radius, K)
    blocks = prune_unread(graph) if prune else sorted(graph)
    block_index = {blk: k for k, blk in enumerate(blocks)}
    mon_index = {m: k for k, m in enumerate(mons)}
    nm = len(mons)
    size = len(blocks) * nm
    e = ctx.e
    acc: List[Dict[int, List[int]]] = [dict() for _ in range(size)]
    plan = _plan(weight, gdata, a)
    for (comp, ball) in blocks:
        row_base = block_index[(comp, ball)] * nm
        for _, x, per_comp in plan:
            target, twist = per_comp[comp]
            pb = pullback_through(_steps_for(n, x, a, twist), n, p, ball, radius, D, chars)
            src = (target, pb.in_ball)
            if src not in block_index:
                continue
            col_base = block_index[src] * nm
            powers = _local_powers(pb.in_local, mons, D)
            cvec = [c % mod for c in pb.char_const.coeffs] if pb.char_const.prec is not None else \
                [_mod(c, mod, p) for c in pb.char_const.coeffs]
            for mon, ser in powers.items():
                if pb.char_series is not None:
                    ser = ser * pb.char_series
                col = col_base + mon_index[mon]
                for k, coeff in ser.c.items():
                    row = row_base + mon_index[k]
                    cm = _mod(coeff, mod, p)
                    if cm == 0:
                        continue
                    slot = acc[row].get(col)
                    if slot is None:
                        slot = acc[row][col] = [0] * e
                    for i in range(e):
                        slot[i] = (slot[i] + cm * cvec[i]) % mod
    zero = (0,) * e
    entries = [[tuple(acc[r][c]) if c in acc[r] else zero for c in range(size)] for r in range(size)]
    slope = Fraction(min(min_gap(a), radius + 1)) if not _is_central(a) else Fraction(0)
    basis = [(comp, ball, m) for (comp, ball) in blocks for m in mons]
    floors = [slope * sum(m) for _, _, m in basis]
    mat = UpMatrix(ctx, basis, entries, K, floors, slope * (D + 1), a, radius, D,
                   len(graph) - len(blocks))
    _audit_floors(mat)
    return mat


def _audit_floors(mat: UpMatrix) -> None:
    """Every computed entry must respect its row floor (up to the precision)."""
    for r in range(mat.size):
        fl = mat.row_floors[r]
        for c in range(mat.size):
            vec = mat.entries[r][c]
            if any(vec):
                v = TruncatedElement(mat.ctx, list(vec), mat.K).valuation()
                if v < fl and (mat.K is None or v < mat.K):
                    raise ArithmeticError(f"entry ({r},{c}) has valuation {v} below row floor {fl}")


def scaling_matrix(weight: WeightCharacter, a: Sequence[int], D: int, K: int) -> UpMatrix:
    """Matrix of the single translation u^a on the one-ball monomial basis."""
    n, p = weight.n, weight.p
    chars = TorusCharacter(weight, K)
    nv = len(lower_positions(n))
    mons = monomials(nv, D)
    mod = p ** K
    pb = pullback_through([("scale", list(a))], n, p, (0,) * nv, 0, D, chars)
    powers = _local_powers(pb.in_local, mons, D)
    idx = {m: k for k, m in enumerate(mons)}
    e = chars.ctx.e
    ents = [[(0,) * e for _ in mons] for _ in mons]
    for mon, ser in powers.items():
        for k, coeff in ser.c.items():
            ents[idx[k]][idx[mon]] = (_mod(coeff, mod, p),) + (0,) * (e - 1)
    basis = [(0, (0,) * nv, m) for m in mons]
    return UpMatrix(chars.ctx, basis, ents, K, [Fraction(0)] * len(mons), None, tuple(a), 0, D)


# -- characteristic series ------------------------------------------------------------------


@dataclass
class Coefficient:
    N: int
    value: TruncatedElement
    certified: bool
    floor: Valuation
    cut_bound: Optional[Fraction]

    @property
    def valuation(self) -> Valuation:
        return self.value.valuation() if self.certified else self.floor


@dataclass
class CharSeries:
    coefficients: List[Coefficient]
    N_max: int
    tail_floors: List[Fraction] = field(default_factory=list)

    def certified_upto(self) -> int:
        """Largest N with c_1..c_N all certified."""
        k = 0
        for c in self.coefficients[1:]:
            if not c.certified:
                break
            k = c.N
        return k

    def points(self, allow_floors: bool = False):
        pts = []
        for c in self.coefficients:
            if c.certified:
                pts.append((c.N, c.value.valuation()))
            elif allow_floors:
                pts.append((c.N, c.floor))
        return pts

    def polygon(self, allow_floors: bool = False) -> NewtonPolygon:
        if not allow_floors and any(not c.certified for c in self.coefficients):
            raise CertificationError("uncertified coefficients present")
        return lower_hull(self.points(allow_floors))

    def certified_polygon(self) -> NewtonPolygon:
        upto = self.certified_upto()
        return lower_hull([(c.N, c.value.valuation()) for c in self.coefficients[:upto + 1]])

    def envelope(self, x_max: int) -> NewtonPolygon:
        """Hull of certified values and proven floors, extended with tail floors.

        The true polygon lies on or above this hull on [0, x_max].
        """
        pts = [(c.N, c.value.valuation() if c.certified else c.floor) for c in self.coefficients]
        pts = [(x, y) for x, y in pts if not y.is_infinite]
        if not self.tail_floors:
            return lower_hull(pts)
        N = self.N_max
        prev_g: Dict[int, Fraction] = {}
        limit = max(10 * (self.N_max + 1), 4 * x_max + 8)
        while N < limit:
            N += 1
            FN = sum(self._smallest(N))
            pts.append((N, Valuation(FN)))
            verts = [(x, y.value) for x, y in pts if x <= x_max]
            rising = True
            for x0, y0 in verts:
                g = (FN - y0) / (N - x0)
                if x0 in prev_g and g < prev_g[x0]:
                    rising = False
                prev_g[x0] = g
            if rising and N > max(self.N_max, x_max) + 1:
                break
        return lower_hull(pts)

    def _smallest(self, N: int) -> List[Fraction]:
        """The N smallest row floors, padding with the excluded floor."""
        floors = self.tail_floors[:N]
        return floors + [self._excluded] * (N - len(floors))

    _excluded: Fraction = Fraction(0)

    def to_json(self) -> dict:
        out = []
        for c in self.coefficients:
            item = {"N": c.N, "certified": c.certified}
            if c.certified:
                item["valuation"] = str(c.value.valuation())
            else:
                item["floor"] = str(c.floor)
            if c.cut_bound is not None:
                item["cut_bound"] = f"{c.cut_bound.numerator}/{c.cut_bound.denominator}"
            out.append(item)
        return {"N_max": self.N_max, "certified_upto": self.certified_upto(), "coefficients": out}


def _thread_cap() -> int:
    try:
        cap = int(os.environ.get("HALO_THREADS", "0"))
    except ValueError:
        cap = 0
    cpus = os.cpu_count() or 1
    return max(1, min(cap, cpus)) if cap > 0 else cpus


def power_traces(M: UpMatrix, N_max: int) -> List[TruncatedElement]:
    """tr(M^k) for k = 1..N_max as ring elements."""
    ctx, size, e = M.ctx, M.size, M.ctx.e
    if M.exact:
        return _power_traces_exact(M, N_max)
    import flint
    try:
        flint.ctx.threads = _thread_cap()
    except Exception:  # older builds without the threads knob
        pass
    mod = ctx.p ** M.K
    fctx = flint.fmpz_mod_ctx(mod)
    big = [[0] * (size * e) for _ in range(size * e)]
    basis_pi = [[int(i == j) for j in range(e)] for i in range(e)]
    for r in range(size):
        for c in range(size):
            vec = M.entries[r][c]
            if not any(vec):
                continue
            for i in range(e):
                col = ctx.mul_vec(list(vec), basis_pi[i])
                for k in range(e):
                    big[r * e + k][c * e + i] = col[k] % mod
    R = flint.fmpz_mod_mat(big, fctx)
    P = R
    out = []
    for k in range(1, N_max + 1):
        if k > 1:
            P = P * R
        tr = [0] * e
        for r in range(size):
            for kk in range(e):
                tr[kk] += int(P[r * e + kk, r * e])
        out.append(TruncatedElement(ctx, [t % mod for t in tr], M.K))
    return out


def _power_traces_exact(M: UpMatrix, N_max: int) -> List[TruncatedElement]:
    ctx, size = M.ctx, M.size
    A = [[TruncatedElement(ctx, list(M.entries[r][c])) for c in range(size)] for r in range(size)]
    P = A
    out = []
    for k in range(1, N_max + 1):
        if k > 1:
            P = [[sum((P[r][t] * A[t][c] for t in range(size)), ctx.element(0)) for c in range(size)]
                 for r in range(size)]
        out.append(sum((P[r][r] for r in range(size)), ctx.element(0)))
    return out


def cut_bounds(M: UpMatrix, N_max: int) -> List[Optional[Fraction]]:
    """B_N: every principal N-minor touching an excluded basis vector has valuation >= B_N."""
    if M.excluded_floor is None:
        return [None] * (N_max + 1)
    F = M.excluded_floor
    floors = sorted(M.row_floors)
    out: List[Optional[Fraction]] = [None]
    for N in range(1, N_max + 1):
        pool = floors[:N - 1] + [F] * (N - 1)
        pool.sort()
        out.append(F + sum(pool[:N - 1], Fraction(0)))
    return out


def char_series(M: UpMatrix, N_max: int) -> CharSeries:
    """Coefficients of det(1 - X M) up to X^N_max via Newton's identities."""
    if N_max < 0:
        raise PreconditionError("N_max must be nonnegative")
    ctx = M.ctx
    traces = power_traces(M, N_max) if N_max else []
    bounds = cut_bounds(M, N_max)
    coeffs = [ctx.element(1)]
    for N in range(1, N_max + 1):
        s = ctx.element(0) if M.exact else ctx.element(0, M.K)
        for i in range(1, N + 1):
            s = s + coeffs[N - i] * traces[i - 1]
        coeffs.append(-(s.div_int(N)))
    out = [Coefficient(0, coeffs[0], True, Valuation(Fraction(0)), None)]
    for N in range(1, N_max + 1):
        c = coeffs[N]
        B = bounds[N]
        if M.exact and M.excluded_floor is None:
            out.append(Coefficient(N, c, True, c.valuation(), None))
            continue
        v = c.valuation()
        exact_here = c.valuation_is_exact()
        limit = B if B is not None else Fraction(c.prec if c.prec is not None else 10 ** 9)
        if c.prec is not None:
            limit = min(limit, Fraction(c.prec))
        certified = exact_here and v.value < limit
        floor = v if v.is_infinite else Valuation(min(v.value, B) if B is not None else v.value)
        out.append(Coefficient(N, c, certified, floor, B))
    cs = CharSeries(out, N_max)
    if M.excluded_floor is not None:
        cs.tail_floors = sorted(M.row_floors)
        cs._excluded = M.excluded_floor
    return cs
