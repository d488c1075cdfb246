import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unirat.exactcore import QQ, ExactMatrix, rank
from unirat.geom import ProjPoint, TangentsCoincide
from unirat.mpoly import MPoly, NotDivisible, format_poly, parse_poly
from unirat.pipeline import (
    Ci23Instance,
    LambdaZero,
    ObstructionReport,
    QuarticInstance,
    SectionSingular,
    build_real_example,
    ci23_parametrize,
    circle_conic,
    decompose_cone,
    generic_section,
    instance_from_json,
    instance_to_json,
    load_instance,
    parametrize_H4,
    parametrize_Y4,
    reverse_build,
    save_instance,
    solve_quadric_system,
    sphere_form,
)
from unirat.pipeline import _cone_surface


def x(i, n=7):
    return MPoly.variable(i, n, QQ)


def f7():
    return sphere_form().extend_variables(7)


def good_quartic():
    # F = f^2 + x5 * x0^2*x2: the residual cubic x0^2*x2 vanishes on the circle
    f6 = sphere_form().extend_variables(6)
    return QuarticInstance(n=5, F=f6 * f6 + x(5, 6) * x(0, 6) ** 2 * x(2, 6),
                           f=sphere_form())


def bad_quartic():
    # x0^3 restricted to the circle is (1-t^2)^3 != 0, so no witness survives
    f6 = sphere_form().extend_variables(6)
    return QuarticInstance(n=5, F=f6 * f6 + x(5, 6) * x(0, 6) ** 3,
                           f=sphere_form())


def raw_quartic(F, f):
    """Skip the constructor checks to reach guards further down the pipeline."""
    Y = object.__new__(QuarticInstance)
    for name, val in [("n", 5), ("F", F), ("f", f), ("alpha", Fraction(1)),
                      ("gamma_coord", None), ("cubics", None), ("conic", None),
                      ("epsilon", None), ("seeds", None)]:
        object.__setattr__(Y, name, val)
    return Y


# -- instance validation ------------------------------------------------------


def test_quartic_instance_checks_restriction_identity():
    f6 = sphere_form().extend_variables(6)
    with pytest.raises(ValueError):
        QuarticInstance(n=5, F=f6 * f6 + x(0, 6) ** 4, f=sphere_form())
    with pytest.raises(ValueError):
        QuarticInstance(n=4, F=f6 * f6, f=sphere_form())
    with pytest.raises(ValueError):
        QuarticInstance(n=5, F=f6 * f6 * f6.set_variable_zero(0), f=sphere_form())


def test_quartic_instance_scales_by_alpha():
    f6 = sphere_form().extend_variables(6)
    Y = QuarticInstance(n=5, F=(f6 * f6).scale(3), f=sphere_form(),
                        alpha=Fraction(3))
    assert Y.slice_subspace().dim() == 4  # M is a P^4 inside P^5


def test_ci23_instance_rejections():
    q = x(5) * x(6) + f7()
    c = x(0) ** 2 * x(2) - x(6) * f7()
    surf = _cone_surface(circle_conic())
    e6 = ProjPoint([0] * 6 + [1])
    Ci23Instance(q=q, c=c, surface=surf, vertex=e6, conic=circle_conic())
    with pytest.raises(ValueError):  # vertex must be the last coordinate point
        Ci23Instance(q=q, c=c, surface=surf,
                     vertex=ProjPoint([1] + [0] * 6), conic=circle_conic())
    with pytest.raises(ValueError):  # degenerate pencil quadric
        Ci23Instance(q=x(5) * x(6), c=c, surface=surf, vertex=e6,
                     conic=circle_conic())
    with pytest.raises(ValueError):  # surface escapes the cubic
        Ci23Instance(q=q, c=c + x(1) ** 3, surface=surf, vertex=e6,
                     conic=circle_conic())


# -- cone decomposition -------------------------------------------------------


def test_decompose_cone_worked_example():
    split = decompose_cone(good_quartic(), x(5) * x(6) + f7())
    assert split.lam == 1
    assert format_poly(split.l) == "x6"
    assert format_poly(split.c1) == "x0^2*x2"
    assert format_poly(split.c) == (
        "x0^2*x2 - x0^2*x6 - x1^2*x6 - x2^2*x6 - x3^2*x6 + x4^2*x6")


def test_decompose_cone_tracks_lambda():
    f6 = sphere_form().extend_variables(6)
    Y = QuarticInstance(n=5, F=f6 * f6 + x(5, 6) * x(0, 6) ** 3, f=sphere_form())
    split = decompose_cone(Y, x(5) * x(6) + f7().scale(2))
    assert split.lam == 2
    assert format_poly(split.c1) == "x0^3"
    assert format_poly(split.c) == (
        "x0^3 - 1/2*x0^2*x6 - 1/2*x1^2*x6 - 1/2*x2^2*x6"
        " - 1/2*x3^2*x6 + 1/2*x4^2*x6")


def test_decompose_cone_rejects_bad_quadrics():
    Y = good_quartic()
    with pytest.raises(LambdaZero):
        decompose_cone(Y, x(5) * x(6))
    with pytest.raises(ValueError):  # restriction to x5 = 0 is not a multiple of f
        decompose_cone(Y, x(5) * x(6) + x(0) ** 2)
    with pytest.raises(ValueError):
        decompose_cone(Y, x(5) * x(6) ** 2 + f7() * x(0))


def test_decompose_cone_divisibility_guard():
    f6 = sphere_form().extend_variables(6)
    Y = raw_quartic(f6 * f6 + x(0, 6) ** 4, sphere_form())
    with pytest.raises(NotDivisible):
        decompose_cone(Y, x(5) * x(6) + f7())


# -- the linear system --------------------------------------------------------


def test_solver_finds_the_standard_witness():
    rep = solve_quadric_system(good_quartic(), circle_conic())
    assert (rep.vector_dim, rep.proj_dim) == (8, 7)
    assert rep.obstruction == (0,) * 7
    assert rep.feasible
    assert len(rep.solution_basis) == 8
    assert rep.witness_vector == (0, 0, 0, 0, 0, 0, 1, 1)
    assert format_poly(rep.witness) == "x0^2 + x1^2 + x2^2 + x3^2 - x4^2 + x5*x6"
    # the witness really contains the cone: restrict to x5 = 0
    assert rep.witness.set_variable_zero(5) == f7()


def test_solver_reports_the_obstruction():
    rep = solve_quadric_system(bad_quartic(), circle_conic())
    assert rep.obstruction == (1, 0, -3, 0, 3, 0, -1)
    assert not rep.feasible
    assert rep.witness is None and rep.witness_vector is None
    # every solution of the linear system kills the f-component
    assert len(rep.solution_basis) == 7
    assert all(v[7] == 0 for v in rep.solution_basis)
    assert rep.conditions.nrows == 7 and rep.conditions.ncols == 8


def test_solver_rejects_a_conic_off_the_surface():
    f6 = sphere_form()
    definite = parse_poly("x0^2+x1^2+x2^2+x3^2+x4^2", nvars=5)
    F = (definite * definite).extend_variables(6)
    Y = QuarticInstance(n=5, F=F, f=definite)
    with pytest.raises(ValueError):
        solve_quadric_system(Y, circle_conic())
    assert f6.evaluate([Fraction(1), 0, 0, 0, Fraction(1)]) == 0


# -- fibrations of the quadric-cubic intersection -----------------------------


def worked_ci23():
    q = x(5) * x(6) + f7()
    c = x(0) ** 2 * x(2) - x(6) * f7()
    return Ci23Instance(q=q, c=c, surface=_cone_surface(circle_conic()),
                        vertex=ProjPoint([0] * 6 + [1]), conic=circle_conic())


def test_ci23_parametrize_frozen_shape():
    phi = ci23_parametrize(worked_ci23(), seed=0)
    assert (phi.in_arity, phi.out_arity) == (4, 7)
    assert phi.chart == 0
    assert len(phi.nodes) == 731
    assert phi.provenance == {"stage": "ci23-fibers", "seed": 0,
                              "pivots": [0, 2], "span": [3, 4, 5], "drop": 1}


def test_ci23_points_live_on_the_intersection():
    inst = worked_ci23()
    phi = ci23_parametrize(inst, seed=0)
    rng = random.Random(7)
    hits = 0
    while hits < 25:
        vals = [Fraction(rng.randint(-9, 9), 1 + rng.randint(0, 3))
                for _ in range(4)]
        pt = phi.eval(vals)
        if all(v == 0 for v in pt):
            continue
        assert inst.q.evaluate(pt) == 0
        assert inst.c.evaluate(pt) == 0
        hits += 1


def test_ci23_dominates_the_intersection():
    phi = ci23_parametrize(worked_ci23(), seed=0)
    vals = [Fraction(1, 2), Fraction(3), Fraction(1), Fraction(2)]
    assert rank(phi.jacobian(vals)) == 4


def test_ci23_is_deterministic():
    a = ci23_parametrize(worked_ci23(), seed=0)
    b = ci23_parametrize(worked_ci23(), seed=0)
    assert a.serialize() == b.serialize()


CI23_SHARED = worked_ci23()
CI23_PHI = ci23_parametrize(CI23_SHARED, seed=0)


@settings(max_examples=25, deadline=None)
@given(st.tuples(*(st.integers(-30, 30) for _ in range(4))),
       st.tuples(*(st.integers(1, 7) for _ in range(4))))
def test_ci23_membership_is_identical(nums, dens):
    vals = [Fraction(a, b) for a, b in zip(nums, dens)]
    pt = CI23_PHI.eval(vals)
    assert CI23_SHARED.q.evaluate(pt) == 0
    assert CI23_SHARED.c.evaluate(pt) == 0


def test_ci23_degenerate_cubics():
    surf = _cone_surface(circle_conic())
    e6 = ProjPoint([0] * 6 + [1])
    q = x(5) * x(6) + f7()
    # c = x5*x0^2 pushes the vertex direction into the radical of every fiber
    inst = Ci23Instance(q=q, c=x(5) * x(0) ** 2, surface=surf, vertex=e6,
                        conic=circle_conic())
    with pytest.raises(SectionSingular):
        ci23_parametrize(inst, seed=0)
    # c = x0*q makes both tangent hyperplanes coincide along the surface
    inst = Ci23Instance(q=q, c=x(0) * q, surface=surf, vertex=e6,
                        conic=circle_conic())
    with pytest.raises(TangentsCoincide):
        ci23_parametrize(inst, seed=0)


# -- the quartic threefold ----------------------------------------------------


def test_parametrize_Y4_worked_example():
    Y = good_quartic()
    psi = parametrize_Y4(Y, seed=0)
    assert (psi.in_arity, psi.out_arity) == (4, 6)
    assert psi.chart == 0
    assert psi.provenance["stage"] == "quartic-threefold"
    assert psi.provenance["fibers"]["pivots"] == [0, 2]
    rng = random.Random(11)
    hits = 0
    while hits < 10:
        vals = [Fraction(rng.randint(-9, 9), 1 + rng.randint(0, 3))
                for _ in range(4)]
        pt = psi.eval(vals)
        if all(v == 0 for v in pt):
            continue
        assert Y.F.evaluate(pt) == 0
        hits += 1
    assert rank(psi.jacobian([Fraction(1, 2), Fraction(3),
                              Fraction(1), Fraction(2)])) == 4


def test_parametrize_Y4_obstructed_report():
    rep = parametrize_Y4(bad_quartic(), seed=0)
    assert isinstance(rep, ObstructionReport)
    assert rep.to_json() == {
        "status": "obstructed",
        "message": "every quadric through the cone compatible with the conic"
                   " degenerates (lambda = 0)",
        "obstruction": ["1", "0", "-3", "0", "3", "0", "-1"],
        "quadrics_through_cone": [8, 7],
        "solution_dim": 7,
    }


# -- reverse construction -----------------------------------------------------


def test_reverse_build_reproduces_the_worked_pair():
    c1 = x(0, 6) ** 2 * x(2, 6)
    ci, quart = reverse_build(c1=c1, seed=0)
    assert quart.F == good_quartic().F
    assert format_poly(ci.q) == "x0^2 + x1^2 + x2^2 + x3^2 - x4^2 + x5*x6"
    assert decompose_cone(quart, ci.q).c1 == c1


def test_reverse_build_seeded_is_deterministic():
    ci, quart = reverse_build(seed=0)
    assert quart.seeds == {"seed": 0, "attempt": 2, "fiber_seed": 2,
                           "samples": 210}
    ci2, quart2 = reverse_build(seed=0)
    assert quart2.F == quart.F and ci2.q == ci.q and ci2.c == ci.c
    # the manufactured pair closes the loop through the forward solver
    rep = solve_quadric_system(quart, quart.conic)
    assert rep.feasible


def test_reverse_build_rejects_a_cubic_off_the_conic():
    with pytest.raises(ValueError):
        reverse_build(c1=x(0, 6) ** 3)
    with pytest.raises(LambdaZero):
        reverse_build(lam=0)


# -- hyperplane sections of higher quartics -----------------------------------


def test_generic_section_matches_direct_substitution():
    H = build_real_example(n=8, preset="cubes", seed=0)
    fam = generic_section(H)
    assert fam.names == ("b6", "b7", "b8")
    assert fam.matrix.nrows == 9 and fam.matrix.ncols == 6
    assert fam.section.nvars == 6 and fam.section.total_degree() == 4
    # specialize b = (1, 2, 3) and compare with a plain rational substitution
    bvals = [Fraction(1), Fraction(2), Fraction(3)]
    spec = fam.section.map_coefficients(QQ, lambda r: r.evaluate(bvals))
    rows = []
    for i in range(9):
        row = [Fraction(0)] * 6
        if i <= 5:
            row[i] = Fraction(1)
        else:
            row[5] = bvals[i - 6]
        rows.append(row)
    direct = H.F.substitute_linear(ExactMatrix(QQ, rows, ncols=6))
    assert spec == direct


def test_parametrize_H4_obstructed_cubes():
    H = build_real_example(n=8, preset="cubes", seed=0)
    rep = parametrize_H4(H, seed=0)
    assert isinstance(rep, ObstructionReport)
    assert rep.to_json() == {
        "status": "obstructed",
        "message": "the residual cubic misses the conic for every section"
                   " parameter",
        "obstruction": ["1/16", "0", "-3/16", "1/2*b6", "3/16", "0", "-1/16"],
        "quadrics_through_cone": [8, 7],
        "solution_dim": 7,
    }


def feasible_h4():
    # F = f^2 + x5*x0^2*x2 + x6^4 + x7^4 + x8^4 on P^8; every section of the
    # pencil keeps the witness from the worked example
    f9 = sphere_form().extend_variables(9)
    F = f9 * f9 + x(5, 9) * x(0, 9) ** 2 * x(2, 9)
    for i in (6, 7, 8):
        F = F + x(i, 9) ** 4
    return QuarticInstance(n=8, F=F, f=sphere_form())


def test_parametrize_H4_feasible_pencil():
    H = feasible_h4()
    phi = parametrize_H4(H, seed=0)
    assert (phi.in_arity, phi.out_arity) == (7, 9)
    assert phi.chart == 0
    assert phi.provenance["stage"] == "hyperplane-pencil"
    rng = random.Random(3)
    hits = 0
    while hits < 5:
        vals = [Fraction(rng.randint(-6, 6), 1 + rng.randint(0, 2))
                for _ in range(7)]
        pt = phi.eval(vals)
        if all(v == 0 for v in pt):
            continue
        assert H.F.evaluate(pt) == 0
        hits += 1
    vals = [Fraction(1), Fraction(-2), Fraction(3),
            Fraction(1, 2), Fraction(3), Fraction(1), Fraction(2)]
    assert rank(phi.jacobian(vals)) == 7  # n - 1: the pencil fills P^8


def test_parametrize_H4_is_deterministic():
    a = parametrize_H4(feasible_h4(), seed=0)
    b = parametrize_H4(feasible_h4(), seed=0)
    assert a.serialize() == b.serialize()


# -- example builder and instance files ---------------------------------------


def test_build_real_example_cubes():
    H = build_real_example(n=8, preset="cubes", seed=0)
    assert [format_poly(c) for c in H.cubics] == ["x0^3", "x1^3", "x2^3", "x3^3"]
    assert H.gamma_coord == 4 and H.epsilon == Fraction(1, 16)
    assert H.seeds == {"seed": 0, "preset": "cubes"}


def test_build_real_example_seeded_is_deterministic():
    a = build_real_example(n=8, preset="seeded", seed=3)
    b = build_real_example(n=8, preset="seeded", seed=3)
    assert a.F == b.F and a.cubics == b.cubics
    assert [len(c.terms) for c in a.cubics] == [31, 28, 28, 25]
    with pytest.raises(ValueError):
        build_real_example(preset="nope")
    with pytest.raises(ValueError):
        build_real_example(n=4)


def test_instance_json_roundtrip(tmp_path):
    H = build_real_example(n=8, preset="seeded", seed=3)
    doc = instance_to_json(H)
    assert doc["version"] == 1 and doc["M"] == "x5..x8 = 0"
    back = instance_from_json(json.loads(json.dumps(doc)))
    assert back.F == H.F and back.f == H.f and back.cubics == H.cubics
    assert back.epsilon == H.epsilon and back.gamma_coord == 4
    path = tmp_path / "h8.json"
    save_instance(H, path)
    assert load_instance(path).F == H.F
