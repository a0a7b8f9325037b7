"""Worked examples for the arithmetic, polygon, weight, representation and
bound modules."""
from __future__ import annotations

from fractions import Fraction

import pytest

from haloslopes.bounds import (iterated_upper_bounds, lower_bound_constants, lower_bound_points,
                               upper_bound_point)
from haloslopes.geometry import disconnect_certificate, ordinary_degree, slope_zero_multiplicity
from haloslopes.newton import (NewtonPolygon, PowerLaw, PreconditionError, lies_above, lower_hull,
                               m_nu, polygon_from_vertices, slopes_below, wan_coincide)
from haloslopes.padic import (INFINITY, CycloContext, Valuation, WildCharacter, eval_wild_char,
                              exp_int, fmt_rational, parse_rational, teichmuller_int)
from haloslopes.reptheory import (classicality_check, lambda_psi_convert, mackey_bruteforce,
                                  slope_budget, weyl_dim)
from haloslopes.upop import UpMatrix, char_series
from haloslopes.weights import (WeightCharacter, forced_radius, is_simple, roche_subgroup,
                                shape_predicates, t_coordinates)

F = Fraction


# -- arithmetic ---------------------------------------------------------------------


def test_valuation_of_p_and_zero():
    ctx = CycloContext(3, 0, 10)
    assert ctx.element(3).valuation() == Valuation.of(1)
    assert ctx.element(0).valuation() == INFINITY


def test_zeta_minus_one_in_fifth_roots():
    ctx = CycloContext(5, 1, 10)
    assert (ctx.zeta(5) - ctx.element(1)).valuation() == Valuation.of(F(1, 4))


def test_teichmuller_lifts():
    K = 12
    w = teichmuller_int(5, 2, K)
    assert w % 5 == 2 and pow(w, 4, 5 ** K) == 1 and w * w % 5 == 4
    assert teichmuller_int(3, 2, K) == 3 ** K - 1
    assert teichmuller_int(7, 1, K) == 1


def test_wild_character_values():
    K = 12
    ctx = CycloContext(5, 1, K)
    chi = WildCharacter(5, 2, 1)
    val = eval_wild_char(ctx, chi, exp_int(5, 5, K))
    assert (val - ctx.element(1)).valuation() == Valuation.of(F(1, 4))
    ctx3 = CycloContext(3, 1, K)
    chi3 = WildCharacter(3, 2, 1)
    cube = eval_wild_char(ctx3, chi3, pow(exp_int(3, 3, K), 3, 3 ** K))
    assert cube == ctx3.element(1, cube.prec)
    assert eval_wild_char(ctx3, WildCharacter(3, 1, 0), 7) == ctx3.element(1, K)


def test_rational_strings():
    assert fmt_rational(F(3, 4)) == "3/4"
    assert fmt_rational(2) == "2/1"
    assert parse_rational("-5/10") == F(-1, 2)


# -- polygons ------------------------------------------------------------------------


def test_lower_hull_examples():
    h = lower_hull([(0, 0), (1, 2), (2, 1), (3, 3)])
    assert h.vertices == ((0, 0), (2, 1), (3, 3))
    assert h.slopes == ((F(1, 2), 2), (F(2), 1))
    h = lower_hull([(0, 0), (1, INFINITY), (2, 3)])
    assert h.slopes == ((F(3, 2), 2),)
    assert lower_hull([(0, 0), (1, 1), (2, 2), (3, 3)]).slopes == ((F(1), 3),)


def test_lower_hull_requires_origin():
    with pytest.raises(PreconditionError):
        lower_hull([(0, 1), (1, 2)])


def test_slopes_below_examples():
    h = polygon_from_vertices([(0, F(0)), (2, F(1)), (3, F(3))])
    assert slopes_below(h, 1) == (2, (2, F(1)))
    assert slopes_below(h, 0) == (0, (0, F(0)))
    flat = polygon_from_vertices([(0, F(0)), (3, F(0)), (4, F(1))])
    assert slopes_below(flat, F(1, 2))[0] == 3


def test_lies_above_examples():
    ones = polygon_from_vertices([(0, F(0)), (5, F(5))])
    assert lies_above(ones, [(0, 0), (5, 4)]) == (True, None)
    flat = polygon_from_vertices([(0, F(0)), (5, F(0))])
    assert lies_above(flat, [(5, 1)]) == (False, F(5))
    assert lies_above(flat, []) == (True, None)


def test_polygon_json_roundtrip():
    h = lower_hull([(0, 0), (1, 2), (2, 1), (3, 3)])
    assert NewtonPolygon.from_json(h.to_json()) == h


def test_m_nu_examples():
    assert m_nu(PowerLaw(F(1), F(1)), 2) == 4
    assert m_nu(PowerLaw(F(1), F(1)), -1) == 0


def test_wan_identical_and_gate():
    nu = PowerLaw(F(1), F(1))
    v = [0, 2, 5, 10]
    assert wan_coincide(v, v, nu, 2, [None] * 4)
    with pytest.raises(PreconditionError):
        wan_coincide(v, v, nu, 2, [None, 4, None, None])


# -- weights -------------------------------------------------------------------------


def test_t_coordinate_examples():
    assert t_coordinates(WeightCharacter(5, (3,), (1,), last_trivial=False))[0] == Valuation.of(1)
    assert t_coordinates(WeightCharacter(5, (3,), (2,), wild_k=(1,)))[0] == Valuation.of(F(1, 4))
    assert t_coordinates(WeightCharacter(5, (0,), (1,)))[0] == INFINITY


def test_roche_trivial_characters():
    d = roche_subgroup(WeightCharacter(3, (0, 0), (1, 1)))
    assert d.c_matrix == [[0, 0], [1, 0]]
    assert d.j_index == 0


def test_simplicity_examples():
    ok, _ = is_simple(WeightCharacter(3, (0, 0, 0, 0), (2, 3, 2, 1)))
    assert ok
    ok, fails = is_simple(WeightCharacter(3, (0, 0, 0), (1, 3, 1)))
    assert not ok and any("condition 2" in f for f in fails)
    assert is_simple(WeightCharacter(3, (0, 0), (2, 1)))[0]


def test_shape_predicates_examples():
    good = shape_predicates(3, {(2, 1): 2, (3, 1): 2, (3, 2): 1}, [0, 0, 0])
    assert good["group_shaped"] and good["analytic_shaped"]
    bad = shape_predicates(3, {(2, 1): 1, (3, 1): 3, (3, 2): 1}, [0, 0, 0])
    assert not bad["group_shaped"]
    assert all(shape_predicates(3, {}, [0, 0, 0]).values())
    half = forced_radius([2, 3, 1])
    assert shape_predicates(3, half, [2, 3, 1])["compatible"]


# -- representations -----------------------------------------------------------------


def test_weyl_dimension_examples():
    assert weyl_dim((0, 0, 0, 0)) == 1
    assert all(weyl_dim((m, 0)) == m + 1 for m in range(8))
    assert weyl_dim((2, 1, 0)) == 8


def test_slope_budget_examples():
    assert slope_budget(3, (0, 0, 0), (1, 1, 0)).value == 0
    for m1 in range(6):
        assert slope_budget(2, (1, 0), (m1, 0)).value == -1 - m1
    b = slope_budget(3, (2, 1, 0), (1, 1, 0))
    assert b.value != b.closed_form  # the displayed closed form is off; reported, not used


def test_lambda_psi_roundtrip_and_example():
    vals = [F(1), F(-2), F(3, 2)]
    there = lambda_psi_convert(3, (1, 2, 0), vals, "psi_to_lambda")
    back = lambda_psi_convert(3, (1, 2, 0), there, "lambda_to_psi")
    assert [v.value for v in back] == vals
    assert lambda_psi_convert(2, (3, 0), [0, 0], "psi_to_lambda")[0] == Valuation.of(F(1, 2))


def test_classicality_examples():
    assert classicality_check([0, 0, 0], (4, 2, 0))
    assert not classicality_check([2, 0], (1, 0))
    assert classicality_check([0, 1, 5], (3, 1, 0))


def test_mackey_examples():
    trivial = mackey_bruteforce(WeightCharacter(3, (0, 0), (1, 1), (1, 0)))
    assert trivial.irreducible and trivial.induced_dim == 1
    simple = mackey_bruteforce(WeightCharacter(3, (0, 0), (2, 1), wild_k=(1, 0)))
    assert simple.irreducible and simple.induced_dim == 3 and simple.intertwiner_dim == 1


def test_mackey_needs_odd_prime():
    with pytest.raises(PreconditionError):
        mackey_bruteforce(WeightCharacter(2, (0, 0), (3, 1), wild_k=(1, 0)))


# -- bounds --------------------------------------------------------------------------


def test_lower_bound_examples():
    assert lower_bound_points(2, 3, 1, F(1, 2), 0)[0].to_json() == ["1/1", "0/1"]
    pts = lower_bound_points(2, 3, 1, F(1, 2), 3)
    assert (pts[-1].x, pts[-1].y) == (4, F(5, 2))
    pts = lower_bound_points(3, 2, 1, F(1, 4), 1)
    assert (pts[-1].x, pts[-1].y) == (4, F(3, 4))
    with pytest.raises(PreconditionError):
        lower_bound_points(2, 3, 1, 1, 3)


def test_lower_bound_constants_bound_the_table():
    A1, C = lower_bound_constants(2, 3, 1)
    for pt in lower_bound_points(2, 3, 1, F(1, 2), 50):
        assert A1 * pt.x ** 2 - C <= pt.y * 2


def test_upper_bound_examples():
    ub = upper_bound_point(WeightCharacter(3, (4, 0), (2, 1)), 1)
    assert ub.point.x == 15
    assert ub.point.y == 15 * slope_budget(2, (1, 0), (4, 0)).value
    base = upper_bound_point(WeightCharacter(3, (0, 0), (1, 1)), 2)
    assert base.point.x == 2


def test_iterate_base_case():
    w = WeightCharacter(3, (4, 0), (2, 1))
    res = iterated_upper_bounds(w, 1, 0, F(1, 3))
    assert res.points == [upper_bound_point(w, 1).point]


def test_iterated_points_grow_in_x():
    res = iterated_upper_bounds(WeightCharacter(3, (4, 0), (2, 1)), 1, 2, F(1, 3))
    xs = [pt.x for pt in res.points]
    assert len(xs) == 3 and xs[0] < xs[1] < xs[2]


@pytest.mark.xfail(strict=True, reason="l(t) is negative for n=2, so y/x decreases along the iteration")
def test_iterated_points_increase_in_average_slope():
    res = iterated_upper_bounds(WeightCharacter(3, (4, 0), (2, 1)), 1, 2, F(1, 3))
    ratios = [pt.y / pt.x for pt in res.points]
    assert ratios[0] < ratios[1] < ratios[2]


# -- geometry ------------------------------------------------------------------------


def test_disconnect_example():
    cert = disconnect_certificate(2, 2, 1)
    assert cert.d_alpha == 2 and cert.nu_alpha == F(1, 4)
    assert cert.lattice == [F(0), F(1, 2), F(1), F(3, 2), F(2), F(3), F(4)]


def test_disconnect_small_alpha_is_empty():
    cert = disconnect_certificate(F(1, 100), 2, 1)
    assert set(cert.lattice) <= {F(0)}


def test_ordinary_degree_examples():
    assert ordinary_degree([0, 0, 1, 0, 2, 3]) == 3
    assert ordinary_degree([0, 1, 2]) == 0
    cs = char_series(UpMatrix.from_rows([[1, 0, 0], [0, 3, 0], [0, 0, 9]], 3), 3)
    vals = [c.value.valuation() for c in cs.coefficients]
    assert ordinary_degree(vals) == 1
    assert slope_zero_multiplicity(vals) == 1
