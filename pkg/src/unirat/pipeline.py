"""From quartics doubled along a quadric surface to explicit parametrizations.

Fixed coordinates throughout.  Inside P^n we single out the slice
M = {x5 = ... = xn = 0} with intrinsic coordinates x0..x4, a rank-five
quadratic form f on those coordinates and the quadric surface Q = {f = 0}.
A quartic {F = 0} is *doubled along Q* when F restricted to M equals
alpha * f^2.

For a quartic threefold Y = {F5 = 0} in P^5 the working object lives one
dimension up.  In P^6, with vertex e6 = (0:...:0:1), let K be the cone over
Q.  Quadrics through K are exactly q = x5*l + lambda*f (l linear), and for
lambda != 0 each pairs with a residual cubic c so that

    lambda * F5 = alpha * f * q + lambda * x5 * c .

The intersection {q = 0, c = 0} projects from e6 back onto Y.  It contains
the cone S over a chosen conic on Q, again with vertex e6, and is swept out
by lines through fiber quadrics sitting inside the tangent spaces along S;
that sweep is what ci23_parametrize turns into a division-free program.

Whether the construction can start at all is a linear question: the cubic c
must vanish on the conic, and since f already does, the only condition is
lambda * c1(conic(t)) = 0 where c1 = (F5 - alpha*f^2)/x5.  A nonzero
c1(conic(t)) therefore forces lambda = 0, every available quadric
degenerates, and the instance is reported as obstructed.
"""

import itertools
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .exactcore import QQ, ExactMatrix, det_fraction_free, kernel_basis
from .geom import (
    LinearSubspace,
    LineInsideCubic,
    ProjPoint,
    QuadricHypersurface,
    TangentsCoincide,
    project_from_point,
    residual_formula,
    stereo_image,
    stereographic_param,
    two_row_kernel,
)
from .mpoly import (
    FunctionField,
    MPoly,
    NotDivisible,
    format_poly,
    gram_matrix,
    parse_poly,
)
from .slp import SlpBuilder, SlpMap

__all__ = [
    "LambdaZero",
    "SectionSingular",
    "InterpolationAmbiguous",
    "InterpolationEmpty",
    "NotDivisible",
    "ConeSplit",
    "QuarticInstance",
    "Ci23Instance",
    "SectionFamily",
    "SolverReport",
    "ObstructionReport",
    "sphere_form",
    "circle_conic",
    "decompose_cone",
    "solve_quadric_system",
    "ci23_parametrize",
    "reverse_build",
    "parametrize_Y4",
    "generic_section",
    "parametrize_H4",
    "build_real_example",
    "instance_to_json",
    "instance_from_json",
    "save_instance",
    "load_instance",
]


class LambdaZero(ArithmeticError):
    """The witness quadric has no f-component, so the cone identity degenerates."""


class SectionSingular(ArithmeticError):
    """The vertex direction is a singular point of the fiber quadric."""


class InterpolationAmbiguous(ArithmeticError):
    """More than one quartic fits the projected sample points."""


class InterpolationEmpty(ArithmeticError):
    """The projected sample points do not lie on the expected quartic."""


# -- canonical ingredients ---------------------------------------------------------


def sphere_form():
    """x0^2 + x1^2 + x2^2 + x3^2 - x4^2, the standard rank-five form with a conic."""
    return parse_poly("x0^2 + x1^2 + x2^2 + x3^2 - x4^2", nvars=5)


def circle_conic():
    """t -> (1 - t^2, 2t, 0, 0, 1 + t^2), the Pythagorean circle on {sphere_form = 0}."""
    b = SlpBuilder(1)
    t = b.inputs[0]
    one = b.const(1)
    zero = b.const(0)
    t2 = t * t
    outs = [one - t2, t + t, zero, zero, one + t2]
    return b.finish(outs, chart=4, provenance={"stage": "circle"})


def _conic_polys(conic):
    """The five coordinate polynomials of a conic program on the slice M."""
    if conic.in_arity != 1 or conic.out_arity != 5:
        raise ValueError("a conic program takes one parameter to five slice coordinates")
    t = MPoly.variable(0, 1, QQ)
    cs = conic.eval([t], lift=lambda c: MPoly.const(1, c, QQ))
    if all(p.total_degree() <= 0 for p in cs):
        raise ValueError("a constant image is not a conic")
    return cs


def _cone_surface(conic):
    """(t, u) -> conic(t) + u * e6, the cone over the conic inside P^6."""
    b = SlpBuilder(2)
    t, u = b.inputs
    g = conic.eval([t], lift=b.const)
    outs = list(g) + [b.const(0), u]
    return b.finish(outs, chart=conic.chart,
                    provenance={"stage": "cone-surface"})


def _to_field(p, fld):
    return p if p.field == fld else p.map_coefficients(fld, fld.coerce)


def _compose_poly(p, coords):
    """p evaluated on polynomial coordinates; the result is over p's field."""
    fld = p.field
    conv = [ci if ci.field == fld else ci.map_coefficients(fld, fld.coerce)
            for ci in coords]
    m = conv[0].nvars
    return p.evaluate(conv, lift=lambda c: MPoly.const(m, fld.coerce(c), fld))


def _univariate_coeffs(p, through_degree):
    return [p.coefficient((d,)) for d in range(through_degree + 1)]


def _monomials(nvars, degree):
    """All exponent tuples of the given total degree, in a fixed order."""
    seen = []
    for combo in itertools.combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for i in combo:
            e[i] += 1
        seen.append(tuple(e))
    return sorted(seen)


def _eval_monomial(point, exp):
    acc = None
    for i, e in enumerate(exp):
        if e:
            v = point[i] ** e
            acc = v if acc is None else acc * v
    return acc if acc is not None else Fraction(1)


# -- instance types ----------------------------------------------------------------


@dataclass(frozen=True)
class ConeSplit:
    """q = x5*l + lam*f together with the residual cubic of the cone identity."""

    c: MPoly
    c1: MPoly
    l: MPoly
    lam: object


@dataclass(frozen=True)
class QuarticInstance:
    """A quartic in P^n that restricts to alpha * f^2 on the slice M."""

    n: int
    F: MPoly
    f: MPoly
    alpha: Fraction = Fraction(1)
    gamma_coord: Optional[int] = None
    cubics: Optional[tuple] = None
    conic: Optional[SlpMap] = None
    epsilon: Optional[Fraction] = None
    seeds: Optional[dict] = None

    def __post_init__(self):
        if self.F.nvars != self.n + 1:
            raise ValueError("quartic arity does not match the ambient dimension")
        if self.F.total_degree() != 4 or not self.F.is_homogeneous():
            raise ValueError("F must be a homogeneous quartic")
        if self.f.nvars != 5 or self.f.total_degree() != 2 or not self.f.is_homogeneous():
            raise ValueError("f must be a quadratic form in the five slice coordinates")
        rest = self.F
        for i in range(5, self.n + 1):
            rest = rest.set_variable_zero(i)
        want = (self.f * self.f).scale(self.alpha).extend_variables(self.n + 1)
        want = _to_field(want, self.F.field)
        if not rest == want:
            raise ValueError("F does not restrict to alpha * f^2 on the slice M")

    def slice_subspace(self):
        """M = {x5 = ... = xn = 0} as a subspace of the ambient space."""
        rows = [[QQ.one if j == i else QQ.zero for j in range(self.n + 1)]
                for i in range(5, self.n + 1)]
        return LinearSubspace(QQ, cutting=ExactMatrix(QQ, rows, ncols=self.n + 1))


@dataclass(frozen=True)
class Ci23Instance:
    """A quadric-cubic intersection in P^6 that is a cone fibration over a conic.

    The surface program (t, u) -> conic(t) + u * e6 must land inside both
    hypersurfaces; the vertex is pinned to the last coordinate point, which
    the fiber machinery relies on.
    """

    q: MPoly
    c: MPoly
    surface: SlpMap
    vertex: ProjPoint
    conic: SlpMap

    def __post_init__(self):
        if self.q.nvars != 7 or self.c.nvars != 7:
            raise ValueError("the complete intersection lives in P^6")
        if self.q.total_degree() != 2 or self.c.total_degree() != 3:
            raise ValueError("expected a quadric and a cubic")
        if not self.vertex.proportional(ProjPoint([0] * 6 + [1])):
            raise ValueError("the surface vertex must be the last coordinate point")
        fld = self.q.field
        if fld.is_zero(det_fraction_free(gram_matrix(self.q))):
            raise ValueError("the quadric of the pencil must be nondegenerate")
        vc = [fld.coerce(x) for x in self.vertex.coords]
        if not (fld.is_zero(self.q.evaluate(vc)) and fld.is_zero(self.c.evaluate(vc))):
            raise ValueError("the vertex does not lie on the intersection")
        tt = MPoly.variable(0, 2, QQ)
        uu = MPoly.variable(1, 2, QQ)
        coords = self.surface.eval([tt, uu], lift=lambda c: MPoly.const(2, c, QQ))
        for poly in (self.q, self.c):
            if not _compose_poly(poly, coords).is_zero():
                raise ValueError("the cone surface does not lie inside the intersection")


@dataclass(frozen=True)
class SectionFamily:
    """The pencil of P^5 sections x_i = b_i * x5 (i >= 6) of a larger quartic."""

    names: tuple
    field: FunctionField
    matrix: ExactMatrix
    section: MPoly


@dataclass(frozen=True)
class SolverReport:
    """Quadrics q = x5*l + lambda*f through the cone K compatible with the conic.

    conditions has one row per t-degree of lambda*c1(conic(t)) minus
    alpha*l(conic(t))*f(conic(t)) and one column per unknown (l_0..l_6,
    lambda); solution_basis spans its kernel.  obstruction records the
    coefficients of c1 on the conic: when it is nonzero every solution has
    lambda = 0 and no nondegenerate witness exists.
    """

    vector_dim: int
    proj_dim: int
    conditions: ExactMatrix
    solution_basis: tuple
    obstruction: tuple
    witness: Optional[MPoly]
    witness_vector: Optional[tuple]

    @property
    def feasible(self):
        return self.witness is not None


@dataclass(frozen=True)
class ObstructionReport:
    """Why no nondegenerate quadric fits: the residual cubic misses the conic."""

    obstruction: tuple
    vector_dim: int
    proj_dim: int
    solution_dim: int
    message: str
    field: object = QQ

    def to_json(self):
        return {
            "status": "obstructed",
            "message": self.message,
            "obstruction": [self.field.format(c) for c in self.obstruction],
            "quadrics_through_cone": [self.vector_dim, self.proj_dim],
            "solution_dim": self.solution_dim,
        }


# -- cone decomposition ------------------------------------------------------------


def decompose_cone(Y, q):
    """Split lambda*F5 = alpha*f*q + lambda*x5*c for a quadric q through the cone.

    Y must be a QuarticInstance with n = 5 and q a quadric on P^6 of the
    shape x5*l + lambda*f.  Raises LambdaZero when q has no f-component and
    NotDivisible when F5 - alpha*f^2 is not a multiple of x5.
    """
    if Y.n != 5:
        raise ValueError("the cone decomposition starts from a quartic threefold in P^5")
    if q.nvars != 7 or q.total_degree() != 2 or not q.is_homogeneous():
        raise ValueError("the witness quadric lives on P^6")
    fld = q.field
    f7 = _to_field(Y.f.extend_variables(7), fld)
    q0 = q.set_variable_zero(5)
    exp0, c0 = f7.leading_term()
    lam = q0.coefficient(exp0) / c0
    if not q0 == f7.scale(lam):
        raise ValueError("the quadric does not contain the doubled cone")
    if fld.is_zero(lam):
        raise LambdaZero("the witness quadric degenerates to x5 * l")
    x5_7 = MPoly.variable(5, 7, fld)
    l = (q - f7.scale(lam)).exact_divide(x5_7)
    if l.total_degree() != 1:
        raise ValueError("the x5-part of the witness quadric is not linear")
    F6 = _to_field(Y.F, fld)
    f6 = _to_field(Y.f.extend_variables(6), fld)
    alpha = fld.coerce(Y.alpha)
    c1 = (F6 - (f6 * f6).scale(alpha)).exact_divide(MPoly.variable(5, 6, fld))
    c = c1.extend_variables(7) - (l * f7).scale(alpha / lam)
    lhs = F6.extend_variables(7).scale(lam) - (f7 * q).scale(alpha) - (x5_7 * c).scale(lam)
    if not lhs.is_zero():
        raise ArithmeticError("cone decomposition identity failed")
    return ConeSplit(c=c, c1=c1, l=l, lam=lam)


# -- the linear system for the witness quadric -------------------------------------


def _count_cone_quadrics(f, conic, seed):
    """Pin the space of quadrics on P^6 vanishing on the cone K to dimension 8.

    The eight quadrics x5*x_j and f vanish on K structurally, so the kernel
    of any sampled evaluation matrix contains them; when the sampled kernel
    has dimension exactly eight the two bounds meet and the count is proven.
    """
    base = conic.eval([Fraction(0)])
    p0 = ProjPoint(base)
    j0 = next(i for i, x in enumerate(p0.coords) if x != 0)
    cut = ExactMatrix(QQ, [[QQ.one if m == j0 else QQ.zero for m in range(5)]])
    sph = stereographic_param(QuadricHypersurface(f), p0,
                              LinearSubspace(QQ, cutting=cut))
    mons = _monomials(7, 2)
    rng = random.Random(seed + 101)
    for round_ in range(3):
        want = 36 * (round_ + 1)
        pts = [[Fraction(0)] * 6 + [Fraction(1)]]
        while len(pts) < want:
            vals = [Fraction(rng.randint(-9, 9)) for _ in range(4)]
            five = sph.eval(vals)
            if all(x == 0 for x in five):
                continue
            pts.append(list(five) + [Fraction(0), Fraction(rng.randint(-3, 3))])
        for pt in pts:
            assert pt[5] == 0 and f.evaluate(pt[:5]) == 0
        rows = [[_eval_monomial(pt, e) for e in mons] for pt in pts]
        ker = kernel_basis(ExactMatrix(QQ, rows, ncols=len(mons)))
        if len(ker) == 8:
            return 8, 7
    raise ArithmeticError(
        "quadrics through the cone: sampled dimension %d instead of 8" % len(ker))


def solve_quadric_system(Y, conic, seed=0):
    """All pairs (l, lambda) with q = x5*l + lambda*f through the cone K whose
    residual cubic keeps the conic inside the intersection, plus a
    nondegenerate witness when one exists.

    The conditions are the t-coefficients of lambda*c1(conic(t)) -
    alpha*l(conic(t))*f(conic(t)); since f vanishes on the conic they only
    constrain lambda.  The witness search walks the kernel over a fixed
    {0, 1, -1} grid and then up to one hundred seeded random combinations,
    skipping lambda = 0 (those quadrics have rank at most two).
    """
    if Y.n != 5:
        raise ValueError("the witness quadric search starts from a quartic threefold")
    g5 = _conic_polys(conic)
    if not _compose_poly(Y.f, g5).is_zero():
        raise ValueError("the conic does not lie on the quadric surface {f = 0}")
    vec_dim, proj_dim = _count_cone_quadrics(Y.f, conic, seed)

    fld = Y.F.field
    f6 = _to_field(Y.f.extend_variables(6), fld)
    c1 = (_to_field(Y.F, fld) - (f6 * f6).scale(fld.coerce(Y.alpha)))
    c1 = c1.exact_divide(MPoly.variable(5, 6, fld))
    g6 = list(g5) + [MPoly.zero(1, QQ)]
    obstruction = _univariate_coeffs(_compose_poly(c1, g6), 6)

    f_on = _compose_poly(Y.f, g5)
    alpha = fld.coerce(Y.alpha)
    cols = []
    for j in range(7):
        gj = g6[j] if j <= 5 else MPoly.zero(1, QQ)
        prod = _to_field(gj * f_on, fld).scale(-alpha)
        cols.append(_univariate_coeffs(prod, 6))
    cols.append(obstruction)
    conditions = ExactMatrix(
        fld, [[cols[m][d] for m in range(8)] for d in range(7)], ncols=8)
    sol = kernel_basis(conditions)

    f7 = _to_field(Y.f.extend_variables(7), fld)
    xs = [MPoly.variable(j, 7, fld) for j in range(7)]

    def assemble(vec):
        l = MPoly.zero(7, fld)
        for j in range(7):
            if not fld.is_zero(vec[j]):
                l = l + xs[j].scale(vec[j])
        return xs[5] * l + f7.scale(vec[7])

    rng = random.Random(seed)
    k = len(sol)
    if all(fld.is_zero(bv[7]) for bv in sol):
        # lambda vanishes on the whole solution space; no combination helps
        combos = iter(())
    else:
        combos = itertools.chain(
            (tuple(1 if m == i else 0 for m in range(k)) for i in range(k)),
            itertools.product((0, 1, -1), repeat=k),
            (tuple(rng.randint(-9, 9) for _ in range(k)) for _ in range(100)),
        )
    witness = None
    witness_vec = None
    for combo in combos:
        if not any(combo):
            continue
        vec = [fld.zero] * 8
        for cm, bv in zip(combo, sol):
            if cm == 0:
                continue
            for idx in range(8):
                vec[idx] = vec[idx] + fld.coerce(cm) * bv[idx]
        if fld.is_zero(vec[7]):
            continue
        q_cand = assemble(vec)
        if not fld.is_zero(det_fraction_free(gram_matrix(q_cand))):
            witness = q_cand
            witness_vec = tuple(vec)
            break
    return SolverReport(vector_dim=vec_dim, proj_dim=proj_dim,
                        conditions=conditions,
                        solution_basis=tuple(tuple(v) for v in sol),
                        obstruction=tuple(obstruction),
                        witness=witness, witness_vector=witness_vec)


# -- sweeping the intersection -----------------------------------------------------


def _plan_fiber(q0, c0, s0):
    """Pivot and basis bookkeeping for the fiber construction at one point.

    All choices are made on plain rationals; the symbolic replay reuses the
    recorded indices.  The common tangent space of {q0 = 0} and {c0 = 0} at
    s0 is spanned, modulo s0 itself, by three kernel columns plus the vertex
    direction; the latter must be a smooth point of the fiber quadric.
    """
    n = q0.nvars
    a0 = [q0.partial_derivative(j).evaluate(s0) for j in range(n)]
    b0 = [c0.partial_derivative(j).evaluate(s0) for j in range(n)]
    pivots = None
    for i1 in range(n):
        for i2 in range(i1 + 1, n):
            if a0[i1] * b0[i2] - a0[i2] * b0[i1] != 0:
                pivots = (i1, i2)
                break
        if pivots:
            break
    if pivots is None:
        raise TangentsCoincide(
            "the tangent spaces of the pencil members coincide at the surface point")
    if n - 1 in pivots:
        raise ValueError("the vertex direction escaped the common tangent space")
    free = [j for j in range(n) if j not in pivots]
    drop = next((j for j in free if j != n - 1 and s0[j] != 0), None)
    if drop is None:
        raise ValueError("the surface point is supported on the pivot columns only")
    span = tuple(j for j in free if j not in (drop, n - 1))
    plan = {"pivots": pivots, "drop": drop, "span": span}

    _, w0 = two_row_kernel(a0, b0, pivots[0], pivots[1], Fraction(0))
    pos = {j: m for m, j in enumerate(free)}
    reps = [w0[pos[j]] for j in span] + [w0[pos[n - 1]]]
    G = gram_matrix(q0)
    col = []
    for rep in reps:
        acc = Fraction(0)
        for i in range(n):
            for j in range(n):
                acc += rep[i] * G.entry(i, j) * reps[-1][j]
        col.append(acc)
    # the vertex direction is isotropic by construction ...
    assert col[-1] == 0
    # ... and must not be in the radical of the fiber form
    if all(x == 0 for x in col):
        raise SectionSingular("the vertex direction is singular on the fiber quadric")
    return plan


def _fiber_construction(q, c, s, chart_vals, plan, lift=None):
    """One point of {q = 0, c = 0} from a surface point s and two chart values.

    Division-free, so it runs on plain rationals for rehearsal and on
    program nodes for the final map; lift embeds coefficients of q and c
    into the carrier ring.  Returns (point, tau-coefficients of c on the
    swept line).
    """
    if lift is None:
        lift = lambda cc: cc
    n = q.nvars
    grad_q = [q.partial_derivative(j).evaluate(s, lift) for j in range(n)]
    grad_c = [c.partial_derivative(j).evaluate(s, lift) for j in range(n)]
    zero = lift(q.field.zero)
    one = lift(q.field.one)
    i1, i2 = plan["pivots"]
    _, w = two_row_kernel(grad_q, grad_c, i1, i2, zero)
    free = [j for j in range(n) if j not in plan["pivots"]]
    pos = {j: m for m, j in enumerate(free)}
    reps = [w[pos[j]] for j in plan["span"]] + [w[pos[n - 1]]]

    G = gram_matrix(q)
    grows = [[lift(G.entry(i, j)) for j in range(n)] for i in range(n)]
    gr = []
    for rep in reps:
        gi = []
        for i in range(n):
            acc = grows[i][0] * rep[0]
            for j in range(1, n):
                acc = acc + grows[i][j] * rep[j]
            gi.append(acc)
        gr.append(gi)
    m = len(reps)
    fiber_gram = [[None] * m for _ in range(m)]
    for a in range(m):
        for bb in range(m):
            acc = reps[a][0] * gr[bb][0]
            for i in range(1, n):
                acc = acc + reps[a][i] * gr[bb][i]
            fiber_gram[a][bb] = acc

    pbar = [zero] * (m - 1) + [one]
    dbar = [one, chart_vals[0], chart_vals[1], zero]
    img = stereo_image(fiber_gram, pbar, dbar)
    d_amb = []
    for i in range(n):
        acc = img[0] * reps[0][i]
        for mm in range(1, m):
            acc = acc + img[mm] * reps[mm][i]
        d_amb.append(acc)
    g = c.restrict_to_line(list(s), d_amb, lift)
    return residual_formula(g[2], g[3], list(s), d_amb), g


def _dry_plan(q0, c0, conic, rng, tries=6):
    """Numeric rehearsal at seeded parameters: fix the plan and an output chart."""
    last = None
    for _ in range(tries):
        t0 = Fraction(rng.randint(-19, 19), 1 + rng.randint(0, 5))
        u0 = Fraction(1 + rng.randint(0, 9), 1 + rng.randint(0, 3))
        s0 = list(conic.eval([t0])) + [Fraction(0), u0]
        try:
            plan = _plan_fiber(q0, c0, s0)
        except (TangentsCoincide, SectionSingular, ValueError) as err:
            last = err
            continue
        for _ in range(4):
            v0 = (Fraction(rng.randint(-9, 9)), Fraction(rng.randint(-9, 9)))
            pt0, g = _fiber_construction(q0, c0, s0, v0, plan)
            if g[2] == 0 and g[3] == 0:
                last = LineInsideCubic("a swept tangent line lies inside the cubic")
                continue
            if all(x == 0 for x in pt0):
                last = ArithmeticError("the fiber construction degenerated at rehearsal")
                continue
            if q0.evaluate(pt0) != 0 or c0.evaluate(pt0) != 0:
                raise ArithmeticError("a fiber point escaped the intersection")
            chart = next(i for i, x in enumerate(pt0) if x != 0)
            return plan, {"t": t0, "u": u0, "v": v0, "point": pt0, "chart": chart}
    raise last if last is not None else TangentsCoincide("no usable surface point found")


def ci23_parametrize(inst, seed=0):
    """Sweep the intersection by (t, u) on the cone surface plus two fiber
    chart coordinates, as one division-free program with seven outputs.

    Over a surface point s the common tangent space carries a quadric whose
    smooth point in the vertex direction projects the fiber onto a chart;
    the third intersection of each projected line with the cubic is the
    output.  Raises TangentsCoincide / SectionSingular / LineInsideCubic
    when the instance degenerates along the whole surface.
    """
    if inst.q.field != QQ:
        raise ValueError("parametric coefficients are handled by parametrize_H4")
    plan, dry = _dry_plan(inst.q, inst.c, inst.conic, random.Random(seed))
    b = SlpBuilder(4)
    t, u, v1, v2 = b.inputs
    g = inst.conic.eval([t], lift=b.const)
    s_refs = list(g) + [b.const(0), u]
    point, _ = _fiber_construction(inst.q, inst.c, s_refs, (v1, v2), plan,
                                   lift=b.const)
    slp = b.finish(point, chart=dry["chart"], provenance={
        "stage": "ci23-fibers",
        "seed": seed,
        "pivots": list(plan["pivots"]),
        "span": list(plan["span"]),
        "drop": plan["drop"],
    })
    if slp.eval([dry["t"], dry["u"], dry["v"][0], dry["v"][1]]) != dry["point"]:
        raise ArithmeticError("symbolic replay diverged from the rehearsal")
    return slp


# -- building matched pairs --------------------------------------------------------


def _conic_vanishing_cubics(conic):
    """Basis of the cubics on P^5 vanishing on the conic (a 49-dim space)."""
    g6 = list(_conic_polys(conic)) + [MPoly.zero(1, QQ)]
    mons = _monomials(6, 3)
    cols = []
    for e in mons:
        pe = MPoly(6, QQ, {e: Fraction(1)})
        cols.append(_univariate_coeffs(_compose_poly(pe, g6), 6))
    rows = [[cols[m][d] for m in range(len(mons))] for d in range(7)]
    ker = kernel_basis(ExactMatrix(QQ, rows, ncols=len(mons)))
    if len(ker) != len(mons) - 7:
        raise ArithmeticError(
            "conic-vanishing cubics: unexpected dimension %d" % len(ker))
    return mons, ker


def _int_rank(rows, p):
    """Row rank over Z/p, plain echelon elimination on integer rows."""
    mat = [[x % p for x in row] for row in rows]
    r = 0
    for col in range(len(mat[0])):
        piv = next((i for i in range(r, len(mat)) if mat[i][col]), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = pow(mat[r][col], p - 2, p)
        mat[r] = [(x * inv) % p for x in mat[r]]
        for i in range(r + 1, len(mat)):
            if mat[i][col]:
                ci = mat[i][col]
                mat[i] = [(x - ci * y) % p for x, y in zip(mat[i], mat[r])]
        r += 1
        if r == len(mat):
            break
    return r


def _interpolate_quartic(slp, F5, seed):
    """Re-derive the projected quartic from >= 200 sampled points.

    Exact membership of the closed form in the sample ideal combines with a
    mod-p rank computation: the sampled kernel contains the closed form, so
    sampled dimension one pins the space of fitting quartics exactly.
    """
    mons = _monomials(6, 4)
    rng = random.Random(seed + 7)
    for round_ in range(3):
        samples = []
        while len(samples) < 210 + 40 * round_:
            args = [Fraction(rng.randint(-9, 9), 1 + rng.randint(0, 3))
                    for _ in range(4)]
            pt = slp.eval(args)
            y = pt[:6]
            if all(x == 0 for x in y):
                continue
            samples.append(y)
        for y in samples:
            if F5.evaluate(y) != 0:
                raise InterpolationEmpty(
                    "a projected sample point misses the expected quartic")
        p = (1000003, 1000033, 1000037)[round_]
        rows = []
        for y in samples:
            dens = 1
            for x in y:
                dens = dens * x.denominator // _gcd(dens, x.denominator)
            iy = [int(x * dens) for x in y]
            rows.append([_eval_monomial(iy, e) % p for e in mons])
        rk = _int_rank(rows, p)
        if rk == len(mons) - 1:
            return len(samples)
    raise InterpolationAmbiguous(
        "sampled quartic space has dimension %d" % (len(mons) - rk))


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def reverse_build(f=None, conic=None, l=None, lam=Fraction(1),
                  alpha=Fraction(1), c1=None, seed=0):
    """Build a matched (intersection, quartic threefold) pair from scratch.

    Chooses a cubic c1 vanishing on the conic (the solvability condition),
    takes the witness q = x5*l + lam*f with residual cubic c, and forms
    F5 = alpha*f^2 + x5*c1.  The quartic is then re-derived by interpolating
    through sampled points of the parametrized intersection, and the cone
    identity is checked exactly.  Returns (Ci23Instance, QuarticInstance).
    """
    if f is None:
        f = sphere_form()
    if conic is None:
        conic = circle_conic()
    if l is None:
        l = MPoly.variable(6, 7, QQ)
    if l.nvars != 7 or l.total_degree() != 1:
        raise ValueError("the witness linear form lives on P^6")
    lam = Fraction(lam)
    alpha = Fraction(alpha)
    if lam == 0:
        raise LambdaZero("lam = 0 never yields a nondegenerate witness")
    g5 = _conic_polys(conic)
    if not _compose_poly(f, g5).is_zero():
        raise ValueError("the conic must lie on {f = 0}")

    mons, ker = _conic_vanishing_cubics(conic)
    g6 = list(g5) + [MPoly.zero(1, QQ)]
    if c1 is not None:
        if c1.nvars != 6 or c1.total_degree() != 3:
            raise ValueError("c1 must be a cubic on P^5")
        if not _compose_poly(c1, g6).is_zero():
            raise ValueError("the chosen cubic does not vanish on the conic")

    rng = random.Random(seed)
    f7 = f.extend_variables(7)
    q = MPoly.variable(5, 7, QQ) * l + f7.scale(lam)
    surface = _cone_surface(conic)
    vertex = ProjPoint([0] * 6 + [1])
    last = None
    for attempt in range(8):
        if c1 is not None:
            pick = c1
        else:
            terms = {}
            for idx in rng.sample(range(len(ker)), 6):
                cm = rng.randint(-2, 2)
                if cm == 0:
                    continue
                for m, entry in enumerate(ker[idx]):
                    if entry != 0:
                        acc = terms.get(mons[m], Fraction(0)) + cm * entry
                        if acc == 0:
                            terms.pop(mons[m], None)
                        else:
                            terms[mons[m]] = acc
            pick = MPoly(6, QQ, terms)
            if pick.is_zero():
                continue
        c = pick.extend_variables(7) - (l * f7).scale(alpha / lam)
        try:
            ci = Ci23Instance(q=q, c=c, surface=surface, vertex=vertex, conic=conic)
            slp = ci23_parametrize(ci, seed=seed + attempt)
        except (TangentsCoincide, SectionSingular, LineInsideCubic,
                ArithmeticError) as err:
            if c1 is not None:
                raise
            last = err
            continue
        break
    else:
        raise last if last is not None else ArithmeticError("no usable cubic found")

    f6 = f.extend_variables(6)
    F5 = (f6 * f6).scale(alpha) + MPoly.variable(5, 6, QQ) * pick
    n_samples = _interpolate_quartic(slp, F5, seed)
    split = decompose_cone(
        QuarticInstance(n=5, F=F5, f=f, alpha=alpha), q)
    if not (split.c == c and split.c1 == pick):
        raise ArithmeticError("the rebuilt quartic does not reproduce the cone split")
    quart = QuarticInstance(n=5, F=F5, f=f, alpha=alpha, conic=conic,
                            seeds={"seed": seed, "attempt": attempt,
                                   "fiber_seed": seed + attempt,
                                   "samples": n_samples})
    return ci, quart


# -- the P^5 and P^n entry points --------------------------------------------------


def _with_chart(slp, chart, provenance):
    return SlpMap(slp.in_arity, slp.out_arity, list(slp.nodes),
                  list(slp.outputs), chart=chart, provenance=provenance)


def parametrize_Y4(Y, conic=None, seed=0):
    """Four-parameter program onto a quartic threefold, or the obstruction.

    Chains the witness search, the cone decomposition, the intersection
    sweep and the projection from the vertex.  Returns an SlpMap on success
    and an ObstructionReport when every available quadric degenerates.
    """
    if Y.n != 5:
        raise ValueError("expected a quartic threefold in P^5")
    if conic is None:
        conic = Y.conic if Y.conic is not None else circle_conic()
    rep = solve_quadric_system(Y, conic, seed=seed)
    if not rep.feasible:
        return ObstructionReport(
            obstruction=rep.obstruction,
            vector_dim=rep.vector_dim, proj_dim=rep.proj_dim,
            solution_dim=len(rep.solution_basis),
            message="every quadric through the cone compatible with the conic "
                    "degenerates (lambda = 0)",
            field=Y.F.field)
    split = decompose_cone(Y, rep.witness)
    ci = Ci23Instance(q=rep.witness, c=split.c, surface=_cone_surface(conic),
                      vertex=ProjPoint([0] * 6 + [1]), conic=conic)
    phi = ci23_parametrize(ci, seed=seed)
    proj = project_from_point(ProjPoint([0] * 6 + [1]))
    comp = proj.compose(phi)
    rng = random.Random(seed + 13)
    vals = None
    for _ in range(6):
        args = [Fraction(rng.randint(-7, 7), 1 + rng.randint(0, 2))
                for _ in range(4)]
        vals = comp.eval(args)
        if any(x != 0 for x in vals):
            break
    else:
        raise ArithmeticError("the projection collapsed the parametrized intersection")
    if Y.F.evaluate(vals) != 0:
        raise ArithmeticError("a parametrized point escaped the quartic")
    prov = {"stage": "quartic-threefold", "seed": seed,
            "fibers": phi.provenance}
    return _with_chart(comp, next(i for i, x in enumerate(vals) if x != 0), prov)


def generic_section(H):
    """Restrict a doubled quartic on P^n to the pencil x_i = b_i * x5 (i >= 6)
    of P^5 sections, over the rational function field in the b_i.

    The slice M and the surface Q are untouched by the substitution, so
    every member of the pencil is again doubled along Q; the restriction
    identity is checked symbolically before returning.
    """
    if H.n < 6:
        raise ValueError("sections need an ambient space of at least P^6")
    names = tuple("b%d" % i for i in range(6, H.n + 1))
    ff = FunctionField(names)
    rows = []
    for i in range(H.n + 1):
        row = [ff.zero] * 6
        if i <= 5:
            row[i] = ff.one
        else:
            row[5] = ff.generator(i - 6)
        rows.append(row)
    matrix = ExactMatrix(ff, rows, ncols=6)
    section = H.F.substitute_linear(matrix)
    rest = section.set_variable_zero(5)
    want = _to_field((H.f * H.f).scale(H.alpha).extend_variables(6), ff)
    if not rest == want:
        raise ArithmeticError("the section lost the doubling along the surface")
    return SectionFamily(names=names, field=ff, matrix=matrix, section=section)


def _parameter_lift(builder, brefs):
    """Embed rational functions of the section parameters as program nodes."""
    def lift(co):
        if isinstance(co, (int, Fraction)):
            return builder.const(co)
        num = co.num.evaluate(list(brefs), lift=builder.const)
        if co.den.total_degree() == 0:
            return num
        return num / co.den.evaluate(list(brefs), lift=builder.const)
    return lift


def parametrize_H4(H, conic=None, seed=0):
    """(n - 1)-parameter program onto a doubled quartic in P^n (n >= 6), or the
    obstruction blocking every member of the section pencil at once.

    The section parameters b6..bn stay live program inputs followed by
    (t, u, v1, v2), so a single program covers the whole pencil; on the
    obstructed side the report carries coefficients from the parameter
    field, polynomial in the b_i.
    """
    fam = generic_section(H)
    if conic is None:
        conic = H.conic if H.conic is not None else circle_conic()
    y_sec = QuarticInstance(n=5, F=fam.section, f=H.f, alpha=H.alpha)
    rep = solve_quadric_system(y_sec, conic, seed=seed)
    if not rep.feasible:
        return ObstructionReport(
            obstruction=rep.obstruction,
            vector_dim=rep.vector_dim, proj_dim=rep.proj_dim,
            solution_dim=len(rep.solution_basis),
            message="the residual cubic misses the conic for every section "
                    "parameter",
            field=fam.field)
    split = decompose_cone(y_sec, rep.witness)
    nb = len(fam.names)
    rng = random.Random(seed)
    last = None
    plan = dry = b0 = None
    for attempt in range(6):
        cand = [Fraction(rng.randint(-5, 5)) for _ in range(nb)]
        q0 = rep.witness.map_coefficients(QQ, lambda r: fam.field.coerce(r).evaluate(cand))
        c0 = split.c.map_coefficients(QQ, lambda r: fam.field.coerce(r).evaluate(cand))
        try:
            plan, dry = _dry_plan(q0, c0, conic, random.Random(seed + attempt))
        except (TangentsCoincide, SectionSingular, LineInsideCubic,
                ValueError) as err:
            last = err
            continue
        b0 = cand
        break
    if plan is None:
        raise last

    b = SlpBuilder(nb + 4)
    brefs = b.inputs[:nb]
    t, u, v1, v2 = b.inputs[nb:]
    lift = _parameter_lift(b, brefs)
    g = conic.eval([t], lift=b.const)
    s_refs = list(g) + [b.const(0), u]
    point, _ = _fiber_construction(rep.witness, split.c, s_refs, (v1, v2),
                                   plan, lift=lift)
    outs = list(point[:6])
    for i in range(nb):
        outs.append(brefs[i] * point[5])
    slp = b.finish(outs, provenance=None)
    args0 = list(b0) + [dry["t"], dry["u"], dry["v"][0], dry["v"][1]]
    vals = slp.eval(args0)
    if all(x == 0 for x in vals):
        raise ArithmeticError("the section program collapsed at the rehearsal point")
    if H.F.evaluate(vals) != 0:
        raise ArithmeticError("a section point escaped the quartic")
    prov = {"stage": "hyperplane-pencil", "seed": seed,
            "inputs": list(fam.names) + ["t", "u", "v1", "v2"],
            "pivots": list(plan["pivots"]), "span": list(plan["span"]),
            "drop": plan["drop"]}
    return _with_chart(slp, next(i for i, x in enumerate(vals) if x != 0), prov)


# -- ready-made families -----------------------------------------------------------


def build_real_example(n=8, epsilon=Fraction(1, 16), seed=0, preset="seeded"):
    """A doubled quartic on P^n with real coefficients and no accidental cones:
    F = f^2 + sum_{i>=5} x_i^4 + epsilon * sum_{i>=5} x_i * c_i.

    The c_i are cubics in the slice coordinates: preset "cubes" takes
    c_i = x_{i-5}^3, preset "seeded" draws integer coefficients in [-2, 2].
    A small epsilon keeps the perturbation from creating real singular
    points away from the slice.
    """
    if n < 5:
        raise ValueError("the family starts at P^5")
    epsilon = Fraction(epsilon)
    f = sphere_form()
    nv = n + 1
    rng = random.Random(seed)
    mons3 = _monomials(5, 3)
    cubics = []
    for i in range(5, n + 1):
        if preset == "cubes":
            e = [0] * 5
            e[(i - 5) % 5] = 3
            cubic = MPoly(5, QQ, {tuple(e): Fraction(1)})
        elif preset == "seeded":
            terms = {}
            while not terms:
                for e in mons3:
                    cm = rng.randint(-2, 2)
                    if cm:
                        terms[e] = Fraction(cm)
            cubic = MPoly(5, QQ, terms)
        else:
            raise ValueError("unknown preset %r" % (preset,))
        cubics.append(cubic)
    f_n = f.extend_variables(nv)
    F = f_n * f_n
    for idx, i in enumerate(range(5, n + 1)):
        xi = MPoly.variable(i, nv, QQ)
        F = F + xi ** 4 + (xi * cubics[idx].extend_variables(nv)).scale(epsilon)
    return QuarticInstance(n=n, F=F, f=f, alpha=Fraction(1), gamma_coord=4,
                           cubics=tuple(cubics), conic=circle_conic(),
                           epsilon=epsilon,
                           seeds={"seed": seed, "preset": preset})


# -- instance files ----------------------------------------------------------------


def instance_to_json(inst):
    doc = {
        "version": 1,
        "n": inst.n,
        "F": format_poly(inst.F),
        "f": format_poly(inst.f),
        "alpha": str(inst.alpha),
        "M": "x5..x%d = 0" % inst.n,
    }
    if inst.gamma_coord is not None:
        doc["Gamma"] = {"vanishing_coordinate": inst.gamma_coord}
    if inst.conic is not None:
        doc["conic"] = inst.conic.to_json()
    if inst.cubics:
        doc["cubics"] = [format_poly(c) for c in inst.cubics]
    if inst.epsilon is not None:
        doc["epsilon"] = str(inst.epsilon)
    if inst.seeds:
        doc["seeds"] = inst.seeds
    return doc


def instance_from_json(doc):
    if doc.get("version") != 1:
        raise ValueError("unsupported instance format")
    n = int(doc["n"])
    gamma = doc.get("Gamma")
    return QuarticInstance(
        n=n,
        F=parse_poly(doc["F"], nvars=n + 1),
        f=parse_poly(doc["f"], nvars=5),
        alpha=Fraction(doc.get("alpha", "1")),
        gamma_coord=None if gamma is None else int(gamma["vanishing_coordinate"]),
        cubics=tuple(parse_poly(s, nvars=5) for s in doc["cubics"])
        if "cubics" in doc else None,
        conic=SlpMap.from_json(doc["conic"]) if "conic" in doc else None,
        epsilon=Fraction(doc["epsilon"]) if "epsilon" in doc else None,
        seeds=doc.get("seeds"),
    )


def save_instance(inst, path):
    with open(path, "w") as fh:
        json.dump(instance_to_json(inst), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_instance(path):
    with open(path) as fh:
        return instance_from_json(json.load(fh))
