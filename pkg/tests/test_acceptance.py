"""Acceptance checks 1 to 12.  Each test records one PASS/FAIL line, printed
again in the terminal summary."""
from __future__ import annotations

import random
import time
from fractions import Fraction
from itertools import product

import pytest

import oracles
from conftest import record
from runs import CONFIGS, DEGREE_CAPS, N_MAX, run
from haloslopes.bounds import lower_bound_constants, lower_bound_points
from haloslopes.geometry import disconnect_certificate, trapped_slopes
from haloslopes.newton import PowerLaw, lies_above, lower_hull, m_nu, wan_coincide
from haloslopes.reptheory import column_chain_count, mackey_bruteforce, slope_budget, weyl_dim
from haloslopes.upop import (assemble_up, coset_reps, distinct_cosets, load_gallery, scaling_matrix)
from haloslopes.weights import (WeightCharacter, explicit_weights, is_simple, roche_subgroup,
                                t_coordinates)


def test_criterion_01_t_coordinates_match_norms():
    start = time.time()
    bad = []
    cases = 0
    for p in (3, 5):
        for c in (1, 2, 3):
            order = p ** max(c - 1, 0)
            ks = [k for k in range(1, order) if k % p][:2] if order > 1 else [0]
            for k, t in product(ks, range(-5, 6)):
                w = WeightCharacter(p, (t,), (c,), wild_k=(k,), last_trivial=False)
                got = t_coordinates(w)[0]
                want = oracles.t_coordinate_valuation(p, c, k, t)
                cases += 1
                if (got.value if not got.is_infinite else None) != want:
                    bad.append((p, c, k, t, str(got), want))
    elapsed = time.time() - start
    ok = not bad and elapsed < 1.0
    record(1, ok, f"{cases} coordinates vs cyclotomic norms, {elapsed:.2f}s, mismatches {bad[:3]}")
    assert not bad
    assert elapsed < 1.0


def _index_cases():
    for n in (2, 3):
        for p in (3, 5):
            for conds in product((1, 2, 3), repeat=n - 1):
                if n == 3 and p == 5 and conds == (3, 3):
                    continue  # 5^6 lattice tuples take ~30 s alone; the shape is covered at p = 3
                yield WeightCharacter(p, (0,) * n, tuple(conds) + (1,))


def test_criterion_02_roche_index_by_lattice_orbits():
    start = time.time()
    bad, cases = [], 0
    for w in _index_cases():
        data = roche_subgroup(w)
        if data.group_condition_failures:
            continue
        got = oracles.level_subgroup_index_log(data.c_matrix, w.p)
        cases += 1
        if got != data.j_index or got != data.j_formula:
            bad.append((w.p, w.conductors, data.j_index, data.j_formula, got))
    elapsed = time.time() - start
    ok = not bad and elapsed < 30
    record(2, ok, f"{cases} level matrices by Iwahori orbit enumeration, {elapsed:.1f}s, mismatches {bad[:3]}")
    assert not bad
    assert elapsed < 30


def test_criterion_03_weyl_dimension():
    start = time.time()
    bad = []
    for m1, m2 in product(range(5), repeat=2):
        t = (m1 + m2, m2, 0)
        d = weyl_dim(t)
        if not d == oracles.semistandard_tableaux_count([m1 + m2, m2], 3) == column_chain_count(t):
            bad.append(t)
    degrees = {}
    for n in (2, 3, 4):
        direction = tuple(range(n - 1, -1, -1))
        degrees[n] = oracles.finite_difference_degree(
            lambda s: weyl_dim(tuple(s * x + 1 * (n - 1 - i) for i, x in enumerate(direction))))
        if degrees[n] != n * (n - 1) // 2:
            bad.append(("degree", n, degrees[n]))
    elapsed = time.time() - start
    ok = not bad and elapsed < 10
    record(3, ok, f"25 weights vs tableaux and chain counts; degrees {degrees}; {elapsed:.2f}s")
    assert not bad


def test_criterion_04_scaling_is_diagonal():
    bad, cases = [], 0
    for n, a in ((2, (1, 0)), (2, (2, 0)), (2, (3, 1)), (3, (1, 0, 0)), (3, (2, 1, 0)), (3, (1, 1, 0)), (3, (3, 1, 0))):
        for p in (2, 3):
            w = WeightCharacter(p, (0,) * n, (1,) * n)
            M = scaling_matrix(w, a, 4, 30)
            cases += 1
            if not M.is_diagonal():
                bad.append((n, a, p, "offdiag"))
                continue
            positions = [(i, j) for i in range(n) for j in range(i)]
            for r, (_, _, e) in enumerate(M.basis):
                want = sum((a[j] - a[i]) * k for (i, j), k in zip(positions, e))
                got = M.entry(r, r).valuation()
                if got.is_infinite or got.value != want:
                    bad.append((n, a, p, e, str(got), want))
    record(4, not bad, f"{cases} scaling matrices, D=4; mismatches {bad[:3]}")
    assert not bad


def test_criterion_05_coset_counts():
    bad, cases = [], 0
    for n, a in ((2, (1, 0)), (2, (2, 0)), (2, (2, 1)), (3, (1, 0, 0)), (3, (1, 1, 0)), (3, (2, 1, 0))):
        for p in (2, 3):
            reps = coset_reps(n, p, a)
            mats = [m for _, m in reps]
            want = p ** sum(a[i] - a[j] for i in range(n) for j in range(i + 1, n))
            cases += 1
            if len(reps) != want:
                bad.append((n, a, p, len(reps), want))
            if not distinct_cosets(mats, p) or not oracles.distinct_left_cosets_mod(mats, p):
                bad.append((n, a, p, "not distinct"))
    record(5, not bad, f"{cases} (n, a, p) cases, counts and pairwise distinctness; failures {bad[:3]}")
    assert not bad


def test_criterion_06_central_element_acts_trivially():
    bad, cases = [], 0
    for name, g in sorted(load_gallery().items()):
        n = g.n or 2
        for p in (2, 3):
            w = WeightCharacter(p, (0,) * n, (2,) + (1,) * (n - 1), wild_k=(1,) + (0,) * (n - 1)) \
                if p == 3 else WeightCharacter(p, (0,) * n, (1,) * n)
            M = assemble_up(w, g, (1,) * n, 3, 20)
            cases += 1
            if not M.is_identity():
                bad.append((name, p))
    record(6, not bad, f"{cases} bundled configs assemble to the identity; failures {bad}")
    assert not bad


def _lower_bound_verdict(p, name):
    r = run(p, name, DEGREE_CAPS[0])
    cs = r["series"]
    poly = cs.certified_polygon()
    pts = [pt for pt in lower_bound_points(2, p, r["h"], r["vTa"], N_MAX) if pt.x <= N_MAX]
    ok_lib, where = lies_above(poly, pts)
    # second route: brute hull and brute bound table, compared at integer x
    verts = oracles.brute_lower_hull([(c.N, c.value.valuation().value) for c in cs.coefficients
                                     if not c.value.valuation().is_infinite])
    table = oracles.lower_bound_table(2, p, r["h"], r["vTa"], N_MAX)

    def hull_at(x):
        for (x0, y0), (x1, y1) in zip(verts, verts[1:]):
            if x0 <= x <= x1:
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        return verts[-1][1] if x == verts[-1][0] else None

    def bound_at(x):
        for (x0, y0), (x1, y1) in zip(table, table[1:]):
            if x0 <= x <= x1:
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        return None

    ok_brute = all(hull_at(x) is None or bound_at(x) is None or hull_at(x) >= bound_at(x)
                   for x in range(0, N_MAX + 1))
    return r, cs.certified_upto(), ok_lib, where, ok_brute


def test_criterion_07_lower_bound_holds():
    lines, failures = [], []
    for p, name in CONFIGS:
        r, upto, ok_lib, where, ok_brute = _lower_bound_verdict(p, name)
        assert ok_lib == ok_brute, f"hull routes disagree for p={p} {name}"
        assert r["seconds"] < 300
        ok = ok_lib and upto == N_MAX
        lines.append(f"p={p} {name} h={r['h']}: {'above' if ok else f'below at x={where}'}")
        if not ok:
            failures.append((p, name))
    record(7, not failures, "; ".join(lines))
    assert not failures, f"lower bound fails for {failures}"


def test_criterion_08_certified_coefficients_stable_in_degree_cap():
    bad = []
    for p, name in CONFIGS:
        small = run(p, name, DEGREE_CAPS[0])["series"]
        big = run(p, name, DEGREE_CAPS[1])["series"]
        for a, b in zip(small.coefficients, big.coefficients):
            if a.certified and b.certified:
                if a.valuation != b.valuation or not a.value.residue_equal(b.value, int(a.cut_bound or 1)):
                    bad.append((p, name, a.N))
            elif a.certified != b.certified:
                bad.append((p, name, a.N, "certification changed"))
    record(8, not bad, f"D={DEGREE_CAPS[0]} vs D={DEGREE_CAPS[1]} on {len(CONFIGS)} configs; unstable {bad[:3]}")
    assert not bad


def test_criterion_09_wan_lemma_harness():
    start = time.time()
    rng = random.Random(2024)
    p = 3
    false_negatives, runs = [], 0
    for nu in (PowerLaw(Fraction(1), Fraction(1)), PowerLaw(Fraction(1, 2), Fraction(1))):
        for _ in range(50):
            L = rng.randrange(3, 9)
            alpha = Fraction(rng.randrange(1, 9), rng.choice((1, 2)))
            m = m_nu(nu, alpha)
            c1 = [1]
            for N in range(1, L):
                floor_N = int(N * nu(N)) + 1
                c1.append(p ** (floor_N + rng.randrange(3)) * rng.choice((1, 2, 4, 5, 7)) * rng.choice((1, -1)))
            c2 = [c1[0]] + [c + p ** max(m + 1, int(N * nu(N)) + 1) * rng.randrange(1, 9)
                            for N, c in enumerate(c1[1:], start=1)]
            v1 = [oracles.vp_int(c, p) for c in c1]
            v2 = [oracles.vp_int(c, p) for c in c2]
            diffs = [oracles.vp_int(b - a, p) for a, b in zip(c1, c2)]
            got = wan_coincide(v1, v2, nu, alpha, diffs)
            runs += 1
            h1 = oracles.brute_lower_hull(list(enumerate(v1)))
            h2 = oracles.brute_lower_hull(list(enumerate(v2)))
            agree = _sides_below(h1, alpha) == _sides_below(h2, alpha)
            if not got or not agree:
                false_negatives.append((nu, alpha, v1, v2))
    elapsed = time.time() - start
    record(9, not false_negatives and elapsed < 10,
           f"{runs} randomized pairs, nu(x)=x and x/2; false negatives {len(false_negatives)}; {elapsed:.2f}s")
    assert not false_negatives


def _sides_below(verts, alpha):
    out = []
    for (x0, y0), (x1, y1) in zip(verts, verts[1:]):
        if (y1 - y0) / (x1 - x0) > alpha:
            break
        out.append((x0, y0, x1, y1))
    return out


def _conductor_two_characters(p=3):
    options = [(1, tm, 0) for tm in range(p - 1)]
    options += [(2, tm, k) for tm in range(p - 1) for k in range(1, p)]
    for (c1, t1, k1), (c2, t2, k2) in product(options, repeat=2):
        if max(c1, c2) == 2:
            yield WeightCharacter(p, (0, 0), (c1, c2), (t1, t2), (k1, k2))


def test_criterion_10_mackey_matches_simplicity():
    start = time.time()
    bad, cases, irreducible = [], 0, 0
    for w in _conductor_two_characters():
        res = mackey_bruteforce(w, "data")
        simple, _ = is_simple(w, "data")
        cases += 1
        irreducible += res.irreducible
        if res.irreducible != simple:
            bad.append((w.conductors, w.tame, w.wild_k, res.irreducible, simple))
    elapsed = time.time() - start
    record(10, not bad and elapsed < 60,
           f"{cases} character pairs with max conductor 2, p=3 ({irreducible} irreducible); "
           f"disagreements {bad}; {elapsed:.1f}s")
    assert not bad


def test_criterion_11_slope_budget_two_ways():
    rng = random.Random(11)
    bad, mismatches = [], set()
    for _ in range(100):
        n = rng.randrange(2, 5)
        a = sorted((rng.randrange(0, 4) for _ in range(n)), reverse=True)
        m = [rng.randrange(0, 4) for _ in range(n - 1)] + [0]
        weighted = sum((j + 1) * m[j] for j in range(n))
        psi = [Fraction(rng.randrange(-5, 6)) for _ in range(n - 1)]
        psi.append(Fraction(weighted) - sum(psi))
        direct = slope_budget(n, a, m, psi)
        shuffled = psi[:]
        rng.shuffle(shuffled)
        permuted = slope_budget(n, a, m, shuffled)
        default = slope_budget(n, a, m)
        oracle = oracles.slope_budget_direct(n, a, m, psi)
        if not direct.value == permuted.value == default.value == oracle:
            bad.append((n, a, m, psi))
        if direct.mismatch:
            ratio = direct.closed_form / direct.value if direct.value else None
            mismatches.add((n, str(ratio)))
    note = f"closed form differs on {len(mismatches)} (n, ratio) classes: {sorted(mismatches)[:4]}" \
        if mismatches else "closed form agrees"
    record(11, not bad, f"100 random inputs, direct = permuted = oracle; {note}")
    assert not bad


def test_criterion_12_small_slopes_are_trapped():
    lines, bad = [], []
    alpha = Fraction(2)
    for p, name in CONFIGS:
        r = run(p, name, DEGREE_CAPS[0])
        A1 = lower_bound_constants(2, p, r["h"])[0]
        cert = disconnect_certificate(alpha, 2, A1)
        ok, offending = trapped_slopes(r["series"].certified_polygon(), r["vTa"], cert)
        hypothesis = r["vTa"] < cert.nu_alpha
        lines.append(f"p={p} {name}: {'trapped' if ok else f'outside {offending}'}"
                     f" (v(T_a) < nu_alpha: {hypothesis})")
        if not ok:
            bad.append((p, name))
    record(12, not bad, "; ".join(lines))
    assert not bad
