"""Replayable certificates for the claims the pipeline makes.

Four certificate kinds cover the four claims worth auditing: a program maps
into a variety (exact identity testing, symbolic or randomized), the map is
dominant (full Jacobian rank at a recorded witness), a quartic is nonsingular
(Jacobian ideal empty modulo a good prime), and a real hyperplane section is
positive definite (weighted AM-GM absorption into a fourth-power diagonal).

Every certificate serializes to JSON with numbers as decimal strings and
embeds whatever it mentions, so `replay_certificate` re-checks a report from
its stored data alone; nothing is trusted and nothing from the original run
is re-derived.  Tampering with any embedded coefficient breaks either a
fingerprint or an exact reconstruction identity.

Soundness of the mod-p certificate rests on the closed-image argument: the
singular locus over the rationals is a projective scheme whose image under
reduction is contained in the singular locus mod p, so emptiness mod one
good prime forces emptiness in characteristic zero.  The prime is screened
against denominators and content so the reduction is faithful.
"""

import hashlib
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .exactcore import QQ, BadPrime, PrimeField, rank
from .groebner import DegreeCeilingExceeded, buchberger, projective_dimension, projective_empty
from .mpoly import MPoly, format_poly, parse_poly
from .slp import PoleHit, SlpMap

SYMBOLIC_INPUT_LIMIT = 4
SYMBOLIC_DEGREE_LIMIT = 60
RANDOM_POINTS = 20
COORDINATE_BOUND = 2 ** 40
CONFIDENCE_BITS = 64


class IdentityFails(ArithmeticError):
    """A nonzero value of F on the image: a disproof, not a random event."""

    def __init__(self, point, value):
        super().__init__("the identity fails at %r" % (point,))
        self.point = point
        self.value = value


class RankDeficient(ArithmeticError):
    def __init__(self, best_rank, target):
        super().__init__("jacobian rank %d stayed below the target %d"
                         % (best_rank, target))
        self.rank = best_rank
        self.target = target


class NotEmptyModP(RuntimeError):
    """Singular points found mod p.  Inconclusive over the rationals: the
    reduction can acquire singular points, so the caller retries with
    another prime."""

    def __init__(self, p, message):
        super().__init__("mod %d: %s" % (p, message))
        self.p = p


class AbsorptionFails(ArithmeticError):
    def __init__(self, variable, budget):
        super().__init__("diagonal budget for x%d exhausted (%s)"
                         % (variable, budget))
        self.variable = variable
        self.budget = budget


class ReplayRejected(ValueError):
    pass


def _sha(text):
    return hashlib.sha256(text.encode("ascii")).hexdigest()


def _frac(s):
    return Fraction(s)


# -- on-variety identity ------------------------------------------------------------


@dataclass(frozen=True)
class OnVarietyCert:
    """F vanishes on the image of Phi.

    Symbolic mode stores the hash of the fully expanded composition (the
    zero polynomial); randomized mode stores the Schwartz-Zippel data: K
    sample points with coordinates uniform in [-M, M] drawn from `seed`,
    all of which evaluated to exactly zero, and the per-point failure
    bound D / (2M + 1) whose K-th power is below 2^-64.
    """

    mode: str
    F_text: str
    nvars: int
    phi_doc: dict
    tracked_degree: int
    points: int = 0
    coordinate_bound: int = 0
    seed: int = 0
    expansion_hash: str = ""

    def per_point_bound(self):
        return Fraction(self.tracked_degree, 2 * self.coordinate_bound + 1)

    def to_json(self):
        doc = {
            "kind": "on-variety",
            "version": 1,
            "mode": self.mode,
            "F": self.F_text,
            "nvars": self.nvars,
            "phi": self.phi_doc,
            "tracked_degree": self.tracked_degree,
        }
        if self.mode == "symbolic":
            doc["expansion_hash"] = self.expansion_hash
        else:
            doc["points"] = self.points
            doc["coordinate_bound"] = str(self.coordinate_bound)
            doc["seed"] = self.seed
            doc["per_point_bound"] = str(self.per_point_bound())
        return doc


def _compose_symbolic(F, phi):
    n = phi.in_arity
    xs = [MPoly.variable(i, n, QQ) for i in range(n)]
    coords = phi.eval(xs, lift=lambda c: MPoly.const(n, c, QQ))
    return F.evaluate(coords, lift=lambda c: MPoly.const(n, c, QQ))


def check_on_variety(phi, F, seed=0, points=RANDOM_POINTS,
                     coordinate_bound=COORDINATE_BOUND):
    """Certify F o Phi = 0, symbolically when the expansion is small enough."""
    if F.nvars != phi.out_arity:
        raise ValueError("the polynomial and the program disagree on the space")
    tracked = F.total_degree() * max(phi.degree_bounds)
    if phi.in_arity <= SYMBOLIC_INPUT_LIMIT and tracked <= SYMBOLIC_DEGREE_LIMIT:
        comp = _compose_symbolic(F, phi)
        if not comp.is_zero():
            pt = _nonzero_witness(comp)
            raise IdentityFails(pt, comp.evaluate(pt))
        return OnVarietyCert(mode="symbolic", F_text=format_poly(F),
                             nvars=F.nvars, phi_doc=phi.to_json(),
                             tracked_degree=tracked,
                             expansion_hash=_sha(format_poly(comp)))
    bound = Fraction(tracked, 2 * coordinate_bound + 1)
    if bound ** points >= Fraction(1, 2 ** CONFIDENCE_BITS):
        raise ValueError("K = %d points at M = %d give less than %d bits"
                         % (points, coordinate_bound, CONFIDENCE_BITS))
    rng = random.Random(seed)
    for _ in range(points):
        pt = [Fraction(rng.randint(-coordinate_bound, coordinate_bound))
              for _ in range(phi.in_arity)]
        val = F.evaluate(phi.eval(pt))
        if val != 0:
            raise IdentityFails([str(c) for c in pt], val)
    return OnVarietyCert(mode="randomized", F_text=format_poly(F),
                         nvars=F.nvars, phi_doc=phi.to_json(),
                         tracked_degree=tracked, points=points,
                         coordinate_bound=coordinate_bound, seed=seed)


def _nonzero_witness(poly):
    rng = random.Random(17)
    for _ in range(1000):
        pt = [Fraction(rng.randint(-9, 9)) for _ in range(poly.nvars)]
        if poly.evaluate(pt) != 0:
            return pt
    raise ArithmeticError("could not exhibit a nonzero value")


# -- dominance ----------------------------------------------------------------------


@dataclass(frozen=True)
class DominanceCert:
    """Exact Jacobian rank = target dimension at a recorded witness point.

    Rank is lower-semicontinuous, so full rank at one rational point gives
    full rank on a dense open set: the image has the dimension of the
    target variety and the map is dominant onto a component through the
    witness.
    """

    witness: tuple
    chart: Optional[int]
    rank: int
    target_dim: int
    phi_doc: dict

    def to_json(self):
        return {
            "kind": "dominance",
            "version": 1,
            "witness": [str(c) for c in self.witness],
            "chart": self.chart,
            "rank": self.rank,
            "target_dim": self.target_dim,
            "phi": self.phi_doc,
        }


def check_dominant(phi, target_dim, seed=0, tries=5):
    """Find a seeded rational witness where the Jacobian has full rank."""
    rng = random.Random(seed)
    best = -1
    for _ in range(tries):
        pt = [Fraction(rng.randint(-9, 9), 1 + rng.randint(0, 3))
              for _ in range(phi.in_arity)]
        try:
            r = rank(phi.jacobian(pt))
        except (PoleHit, ZeroDivisionError):
            continue
        if r > target_dim:
            raise ValueError("rank %d exceeds the target dimension %d: the "
                             "image cannot lie in the claimed variety" % (r, target_dim))
        if r == target_dim:
            return DominanceCert(witness=tuple(pt), chart=phi.chart, rank=r,
                                 target_dim=target_dim, phi_doc=phi.to_json())
        best = max(best, r)
    raise RankDeficient(best, target_dim)


# -- smoothness mod p ---------------------------------------------------------------


def _reduce_mod(poly, gf):
    return poly.map_coefficients(gf, gf.coerce)


def _partials_fingerprint(parts):
    chunks = []
    for part in parts:
        items = sorted(part.terms.items())
        chunks.append(";".join("%s:%d" % (",".join(map(str, e)), c.r)
                               for e, c in items))
    return _sha("|".join(chunks))


@dataclass(frozen=True)
class SmoothModPCert:
    """The Jacobian ideal of F is projectively empty modulo a good prime."""

    p: int
    F_text: str
    nvars: int
    partials_hash: str
    pure_powers: dict
    basis_size: int
    stats: dict

    def to_json(self):
        return {
            "kind": "smooth-mod-p",
            "version": 1,
            "p": self.p,
            "F": self.F_text,
            "nvars": self.nvars,
            "partials_hash": self.partials_hash,
            "pure_powers": {str(i): d for i, d in sorted(self.pure_powers.items())},
            "basis_size": self.basis_size,
            "stats": self.stats,
        }


def _screen_prime(F, p):
    """The reduction is faithful: p is an odd prime hitting no denominator
    and killing neither F nor any of its partials."""
    gf = PrimeField(p)  # raises BadPrime unless p is an odd prime
    for c in F.terms.values():
        if c.denominator % p == 0:
            raise BadPrime("p = %d divides a denominator of F" % p)
    if _reduce_mod(F, gf).is_zero():
        raise BadPrime("p = %d divides the content of F" % p)
    parts = []
    for i in range(F.nvars):
        di = F.partial_derivative(i)
        if di.is_zero():
            raise NotEmptyModP(p, "x%d is absent from F, so the coordinate "
                                  "point is a singular point" % i)
        ri = _reduce_mod(di, gf)
        if ri.is_zero():
            raise BadPrime("p = %d divides the content of dF/dx%d" % (p, i))
        parts.append(ri)
    return parts


def certify_smooth_mod_p(F, p, degree_ceiling=20):
    """Gröbner-certify that F = 0 is nonsingular, via one good prime.

    NotEmptyModP is inconclusive for the rationals (reduction can acquire
    singular points); the caller retries with another prime.  A True
    verdict stands even from an early-stopped basis: the emptiness reader
    is monotone in the generating set.
    """
    parts = _screen_prime(F, p)
    gb = buchberger(parts, degree_ceiling=degree_ceiling,
                    stop_when_zero_dimensional=True)
    if not projective_empty(gb):
        raise NotEmptyModP(p, "singular locus has projective dimension %d"
                              % projective_dimension(gb))
    pure = {}
    for exp in gb.leading_exponents():
        support = [i for i, e in enumerate(exp) if e]
        if len(support) == 1:
            v = support[0]
            d = exp[v]
            if v not in pure or d < pure[v]:
                pure[v] = d
    stats = dict(gb.stats)
    stats["basis_size"] = len(gb)
    return SmoothModPCert(p=p, F_text=format_poly(F), nvars=F.nvars,
                          partials_hash=_partials_fingerprint(parts),
                          pure_powers=pure, basis_size=len(gb), stats=stats)


# -- positivity on a hyperplane -----------------------------------------------------


@dataclass(frozen=True)
class PositivityCert:
    """F restricted to the hyperplane {x_chart = 0} is a positive definite
    real form, shown by an explicit decomposition

        R = sum_i d_i x_i^4  +  (even-exponent terms with positive
            coefficients)  +  (absorbed terms),

    where each absorbed term c * x^a was charged |c| * a_i / 4 against the
    diagonal budget of every variable in its support (weighted AM-GM), and
    every final d_i is strictly positive.  Replay reconstructs R from the
    decomposition coefficient for coefficient.
    """

    chart: int
    nvars: int
    R_text: str
    diagonal: dict
    blocks: tuple
    absorptions: tuple

    def to_json(self):
        return {
            "kind": "positivity",
            "version": 1,
            "chart": self.chart,
            "nvars": self.nvars,
            "R": self.R_text,
            "diagonal": {str(i): str(d) for i, d in sorted(self.diagonal.items())},
            "blocks": [[list(e), str(c)] for e, c in self.blocks],
            "absorptions": [
                {"monomial": list(e), "coefficient": str(c), "scale": str(abs(c)),
                 "weights": [str(Fraction(a, 4)) for a in e]}
                for e, c in self.absorptions
            ],
        }


def certify_positive_on_hyperplane(F, chart=4):
    """Absorb every sign-indefinite monomial of F|_{x_chart = 0} into the
    fourth-power diagonal; certify when all margins stay positive."""
    if not (0 <= chart < F.nvars):
        raise ValueError("chart coordinate out of range")
    if F.total_degree() != 4 or not F.is_homogeneous():
        raise ValueError("positivity certification expects a quartic form")
    R = F.set_variable_zero(chart)
    if R.is_zero():
        raise ValueError("F vanishes identically on the hyperplane")
    active = [i for i in range(F.nvars) if i != chart]
    diagonal = {i: Fraction(0) for i in active}
    blocks = []
    absorptions = []
    for e, c in sorted(R.terms.items()):
        support = [i for i, a in enumerate(e) if a]
        if len(support) == 1 and e[support[0]] == 4 and c > 0:
            diagonal[support[0]] += c
        elif all(a % 2 == 0 for a in e) and c > 0:
            blocks.append((e, c))
        else:
            absorptions.append((e, c))
    for e, c in absorptions:
        for i, a in enumerate(e):
            if a:
                diagonal[i] -= abs(c) * Fraction(a, 4)
    for i in active:
        if diagonal[i] <= 0:
            raise AbsorptionFails(i, diagonal[i])
    return PositivityCert(chart=chart, nvars=F.nvars, R_text=format_poly(R),
                          diagonal=diagonal, blocks=tuple(blocks),
                          absorptions=tuple(absorptions))


# -- the singular-dimension experiment ----------------------------------------------


def _all_monomials(nvars, degree):
    out = []

    def rec(i, left, cur):
        if i == nvars - 1:
            out.append(tuple(cur + [left]))
            return
        for a in range(left + 1):
            rec(i + 1, left - a, cur + [a])

    rec(0, degree, [])
    return sorted(out)


def _experiment_trial(params):
    """One seeded trial: the projective dimension found, or None on a
    ceiling abort.  Trials are seeded individually so a parallel batch
    reproduces the sequential run exactly."""
    d, N, k, p, seed, t, degree_ceiling = params
    gf = PrimeField(p)
    n = N + k + 1
    q = sum((MPoly.variable(i, n, QQ) ** 2 for i in range(N)),
            MPoly.zero(n, QQ)) - MPoly.variable(N, n, QQ) ** 2
    F = q * q
    mons = _all_monomials(n, d - 1)
    rng = random.Random(seed * 1000003 + t)
    for j in range(N + 1, N + 1 + k):
        terms = {}
        while not terms:
            for e in mons:
                cm = rng.randrange(p)
                if cm:
                    terms[e] = Fraction(cm)
        F = F + MPoly.variable(j, n, QQ) * MPoly(n, QQ, terms)
    parts = [_reduce_mod(F.partial_derivative(i), gf) for i in range(n)]
    try:
        gb = buchberger(parts, degree_ceiling=degree_ceiling,
                        stop_when_zero_dimensional=True)
    except DegreeCeilingExceeded:
        return None
    return projective_dimension(gb)


def singular_dimension_experiment(d=4, N=2, k=2, trials=50, p=10007, seed=0,
                                  degree_ceiling=20, jobs=1):
    """How often a random degree-d hypersurface through a fixed singular one
    drops the singular dimension by exactly k.

    The base is the doubled quadric in P^N (singular locus of projective
    dimension N - 1); each trial adds random x_j-multiples of (d-1)-forms
    for the k new coordinates and reads the projective dimension of the
    Jacobian ideal mod p.  Ceiling-aborted trials are excluded from the
    statistics but counted.  Per-trial seeding makes jobs > 1 bit-identical
    to the sequential run.
    """
    if N > 5 or d > 4:
        raise ValueError("the experiment is sized for small desk parameters")
    if d != 4:
        raise ValueError("only the doubled-quadric base (d = 4) is wired up")
    if k < 0 or trials <= 0:
        raise ValueError("need k >= 0 and at least one trial")
    m = N - 1
    predicted = max(m - k, -1)
    counts = {}
    matches = 0
    ceiling = 0
    runs = 1 if k == 0 else trials
    params = [(d, N, k, p, seed, t, degree_ceiling) for t in range(runs)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            dims = list(pool.map(_experiment_trial, params))
    else:
        dims = [_experiment_trial(ps) for ps in params]
    for dim in dims:
        if dim is None:
            ceiling += 1
            continue
        counts[dim] = counts.get(dim, 0) + 1
        if dim == predicted:
            matches += 1
    completed = runs - ceiling
    return {
        "d": d, "N": N, "k": k, "p": p, "trials": runs, "seed": seed,
        "predicted_dimension": predicted,
        "completed": completed,
        "matches": matches,
        "fraction": str(Fraction(matches, completed)) if completed else "0",
        "dimension_counts": {str(dim): c for dim, c in sorted(counts.items())},
        "ceiling_exceeded": ceiling,
    }


# -- replay -------------------------------------------------------------------------


def _replay_on_variety(doc):
    phi = SlpMap.from_json(doc["phi"])
    F = parse_poly(doc["F"], nvars=int(doc["nvars"]))
    if F.nvars != phi.out_arity:
        raise ReplayRejected("arity mismatch between F and the program")
    tracked = F.total_degree() * max(phi.degree_bounds)
    if tracked != int(doc["tracked_degree"]):
        raise ReplayRejected("tracked degree does not match the program")
    if doc["mode"] == "symbolic":
        comp = _compose_symbolic(F, phi)
        if not comp.is_zero():
            raise ReplayRejected("symbolic composition is not zero")
        if _sha(format_poly(comp)) != doc["expansion_hash"]:
            raise ReplayRejected("expansion hash mismatch")
        return
    K = int(doc["points"])
    M = int(doc["coordinate_bound"])
    if Fraction(tracked, 2 * M + 1) ** K >= Fraction(1, 2 ** CONFIDENCE_BITS):
        raise ReplayRejected("stored parameters give too little confidence")
    if Fraction(doc["per_point_bound"]) != Fraction(tracked, 2 * M + 1):
        raise ReplayRejected("stored per-point bound is wrong")
    rng = random.Random(int(doc["seed"]))
    for _ in range(K):
        pt = [Fraction(rng.randint(-M, M)) for _ in range(phi.in_arity)]
        if F.evaluate(phi.eval(pt)) != 0:
            raise ReplayRejected("a recorded sample no longer evaluates to zero")


def _replay_dominance(doc):
    phi = SlpMap.from_json(doc["phi"])
    witness = [Fraction(c) for c in doc["witness"]]
    if len(witness) != phi.in_arity:
        raise ReplayRejected("witness arity mismatch")
    if int(doc["rank"]) != int(doc["target_dim"]):
        raise ReplayRejected("stored rank misses the target dimension")
    try:
        r = rank(phi.jacobian(witness))
    except (PoleHit, ZeroDivisionError):
        raise ReplayRejected("witness hits a pole of the program")
    if r != int(doc["rank"]):
        raise ReplayRejected("jacobian rank at the witness is %d, stored %d"
                             % (r, int(doc["rank"])))


def _replay_smooth(doc):
    p = int(doc["p"])
    F = parse_poly(doc["F"], nvars=int(doc["nvars"]))
    try:
        parts = _screen_prime(F, p)
    except (BadPrime, NotEmptyModP) as err:
        raise ReplayRejected("prime screening failed: %s" % err)
    if _partials_fingerprint(parts) != doc["partials_hash"]:
        raise ReplayRejected("partials fingerprint mismatch")
    pure = {int(i): int(d) for i, d in doc["pure_powers"].items()}
    if sorted(pure) != list(range(F.nvars)):
        raise ReplayRejected("pure powers do not cover every variable")
    if any(d < 1 for d in pure.values()):
        raise ReplayRejected("pure power degrees must be positive")


def _replay_positivity(doc):
    nvars = int(doc["nvars"])
    chart = int(doc["chart"])
    R = parse_poly(doc["R"], nvars=nvars)
    if any(e[chart] for e in R.terms):
        raise ReplayRejected("the restriction still involves the chart variable")
    diagonal = {int(i): Fraction(s) for i, s in doc["diagonal"].items()}
    if sorted(diagonal) != [i for i in range(nvars) if i != chart]:
        raise ReplayRejected("diagonal does not cover the hyperplane")
    if any(d <= 0 for d in diagonal.values()):
        raise ReplayRejected("a diagonal coefficient is not positive")
    rebuilt = MPoly.zero(nvars, QQ)
    for i, dcoef in diagonal.items():
        e = [0] * nvars
        e[i] = 4
        rebuilt = rebuilt + MPoly(nvars, QQ, {tuple(e): dcoef})
    for e, c in doc["blocks"]:
        c = Fraction(c)
        if c <= 0 or any(a % 2 for a in e):
            raise ReplayRejected("a retained block is not an even-power term")
        rebuilt = rebuilt + MPoly(nvars, QQ, {tuple(e): c})
    for step in doc["absorptions"]:
        e = tuple(step["monomial"])
        c = Fraction(step["coefficient"])
        if Fraction(step["scale"]) != abs(c):
            raise ReplayRejected("absorption scale does not match the term")
        if [Fraction(w) for w in step["weights"]] != [Fraction(a, 4) for a in e]:
            raise ReplayRejected("absorption weights are not alpha/4")
        rebuilt = rebuilt + MPoly(nvars, QQ, {e: c})
        for i, a in enumerate(e):
            if a:
                eq = [0] * nvars
                eq[i] = 4
                rebuilt = rebuilt + MPoly(nvars, QQ, {tuple(eq): abs(c) * Fraction(a, 4)})
    if not rebuilt == R:
        raise ReplayRejected("the decomposition does not reconstruct F on the "
                             "hyperplane")


_REPLAYERS = {
    "on-variety": _replay_on_variety,
    "dominance": _replay_dominance,
    "smooth-mod-p": _replay_smooth,
    "positivity": _replay_positivity,
}


def replay_certificate(doc):
    """Re-check one serialized certificate from its stored data alone.

    Returns the certificate kind on acceptance and raises ReplayRejected
    otherwise.  Replay never re-runs the pipeline: it recomposes, re-samples
    from the stored seed, re-screens the prime, or re-sums the positivity
    decomposition, all of which are cheap next to the original search.
    """
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ReplayRejected("not a certificate document")
    kind = doc["kind"]
    if kind not in _REPLAYERS:
        raise ReplayRejected("unknown certificate kind %r" % (kind,))
    if int(doc.get("version", 0)) != 1:
        raise ReplayRejected("unsupported certificate version")
    try:
        _REPLAYERS[kind](doc)
    except ReplayRejected:
        raise
    except Exception as err:  # malformed embedded data is a rejection too
        raise ReplayRejected("replay crashed: %s" % err)
    return kind
