"""Batch command line: build examples, parametrize, certify, replay.

Every command reads and writes JSON files and prints a short human summary;
the machine-readable report embeds each certificate it mentions, so `replay`
can re-check a report without the original instance.  Exit codes are a
stable scripting contract:

    0   success
    2   obstruction (the parametrization question has a negative answer)
    3   inconclusive (no good prime certified smoothness)
    4   a certificate failed to build or to replay
    64  usage errors, malformed inputs, bad primes
    1   unexpected internal error

All randomness flows from --seed; two runs with the same seed produce
byte-identical reports except for the "timings" section.
"""

import argparse
import json
import sys
import time
from fractions import Fraction

from .certify import (
    AbsorptionFails,
    IdentityFails,
    NotEmptyModP,
    RankDeficient,
    ReplayRejected,
    check_dominant,
    check_on_variety,
    certify_positive_on_hyperplane,
    certify_smooth_mod_p,
    replay_certificate,
    singular_dimension_experiment,
)
from .exactcore import QQ, BadPrime, PrimeField
from .geom import ProjPoint
from .groebner import DegreeCeilingExceeded
from .mpoly import MPoly, format_poly, parse_poly
from .pipeline import (
    Ci23Instance,
    ObstructionReport,
    build_real_example,
    ci23_parametrize,
    circle_conic,
    decompose_cone,
    load_instance,
    parametrize_H4,
    parametrize_Y4,
    save_instance,
    solve_quadric_system,
    _cone_surface,
    _compose_poly,
    _conic_polys,
    _univariate_coeffs,
)
from .slp import SlpMap

EX_OK = 0
EX_OBSTRUCTION = 2
EX_INCONCLUSIVE = 3
EX_CERTFAIL = 4
EX_USAGE = 64

DEFAULT_PRIMES = (10007, 10009)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through our exit-code contract."""

    def error(self, message):
        raise _UsageError(message)


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _instance_summary(inst):
    doc = {"n": inst.n, "alpha": str(inst.alpha)}
    if inst.epsilon is not None:
        doc["epsilon"] = str(inst.epsilon)
    if inst.seeds:
        doc["seeds"] = inst.seeds
    if inst.cubics:
        doc["perturbation_cubics"] = len(inst.cubics)
    return doc


def _new_report(command, seed, instance=None):
    doc = {
        "version": 1,
        "command": command,
        "outcome": "Error",
        "certificates": [],
        "timings": {},
    }
    if seed is not None:
        doc["seeds"] = {"seed": seed}
    if instance is not None:
        doc["instance"] = instance
    return doc


def _conic_from_spec(spec):
    if spec == "circle":
        return circle_conic()
    raise _UsageError("unknown conic spec %r (only 'circle' is wired up)" % spec)


def _chart_index(text):
    raw = text[1:] if text.startswith("x") else text
    try:
        return int(raw)
    except ValueError:
        raise _UsageError("cannot read a chart coordinate from %r" % text)


# -- build-example -------------------------------------------------------------------


def cmd_build_example(args):
    if args.n < 8:
        raise _UsageError("the doubled-quartic family is built for n >= 8")
    try:
        epsilon = Fraction(args.epsilon)
    except (ValueError, ZeroDivisionError):
        raise _UsageError("cannot read a rational from %r" % args.epsilon)
    inst = build_real_example(n=args.n, epsilon=epsilon, seed=args.seed,
                              preset=args.preset)
    save_instance(inst, args.out)
    print("wrote instance to %s" % args.out)
    print("n = %d, %d perturbation cubics (x5..x%d), epsilon = %s, preset = %s"
          % (args.n, len(inst.cubics), args.n, epsilon, args.preset))
    print("F restricts to f^2 on the slice x5..x%d = 0" % args.n)
    print("the doubled surface {f = 0} of the slice lies inside {F = 0}")
    if epsilon == 0:
        print("epsilon = 0: singular by construction along the doubled surface")
    return EX_OK


# -- certify -------------------------------------------------------------------------


def _smooth_job(params):
    text, nvars, p, ceiling = params
    F = parse_poly(text, nvars=nvars)
    try:
        cert = certify_smooth_mod_p(F, p, degree_ceiling=ceiling)
        return ("ok", cert.to_json())
    except NotEmptyModP as err:
        return ("inconclusive", str(err))
    except DegreeCeilingExceeded as err:
        return ("ceiling", str(err))


def cmd_certify(args):
    inst = load_instance(args.instance)
    chart = _chart_index(args.gamma_chart)
    primes = args.prime or list(DEFAULT_PRIMES)
    for p in primes:
        PrimeField(p)  # raises BadPrime before any work starts
    report = _new_report("certify", None, _instance_summary(inst))
    # positivity is a fast arithmetic pass; run it before the Groebner work
    t0 = time.time()
    try:
        pos = certify_positive_on_hyperplane(inst.F, chart=chart)
    except AbsorptionFails as err:
        report["outcome"] = "CertificateFailure"
        report["positivity_failure"] = str(err)
        if args.report:
            _write_json(args.report, report)
        print("positivity on {x%d = 0}: %s" % (chart, err))
        print("hint: rebuild the instance with a smaller --epsilon")
        return EX_CERTFAIL
    report["timings"]["positivity_s"] = round(time.time() - t0, 3)
    report["certificates"].append(pos.to_json())
    print("positivity on {x%d = 0}: certified, all diagonal margins positive"
          % chart)
    text = format_poly(inst.F)
    jobs = [(text, inst.F.nvars, p, args.ceiling) for p in primes]
    t0 = time.time()
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_smooth_job, jobs))
    else:
        results = [_smooth_job(job) for job in jobs]
    report["timings"]["smooth_s"] = round(time.time() - t0, 3)
    smooth_ok = False
    notes = []
    for p, (status, payload) in zip(primes, results):
        if status == "ok":
            smooth_ok = True
            report["certificates"].append(payload)
            print("smooth mod %d: certified" % p)
        else:
            notes.append({"prime": p, "status": status, "detail": payload})
            print("smooth mod %d: %s (%s)" % (p, status, payload))
    if notes:
        report["smoothness_notes"] = notes
    if not smooth_ok:
        report["outcome"] = "Inconclusive"
        if args.report:
            _write_json(args.report, report)
        print("no prime certified smoothness; try other primes or a sparser "
              "instance")
        return EX_INCONCLUSIVE
    report["outcome"] = "Success"
    if args.report:
        _write_json(args.report, report)
        print("report written to %s" % args.report)
    return EX_OK


# -- parametrize ---------------------------------------------------------------------


def _obstruction_block(rep, extra=None):
    doc = rep.to_json()
    if extra:
        doc.update(extra)
    return doc


def cmd_parametrize(args):
    inst = load_instance(args.instance)
    conic = _conic_from_spec(args.conic)
    report = _new_report("parametrize", args.seed, _instance_summary(inst))
    report_path = args.report or (args.out + ".report.json")
    t0 = time.time()
    if inst.n == 5:
        rep = solve_quadric_system(inst, conic, seed=args.seed)
        if not rep.feasible:
            f6 = inst.f.extend_variables(6)
            c1 = (inst.F - (f6 * f6).scale(inst.alpha)).exact_divide(
                MPoly.variable(5, 6, QQ))
            obs = ObstructionReport(
                obstruction=rep.obstruction, vector_dim=rep.vector_dim,
                proj_dim=rep.proj_dim, solution_dim=len(rep.solution_basis),
                message="every quadric through the cone compatible with the "
                        "conic degenerates (lambda = 0)")
            report["outcome"] = "Obstruction"
            report["obstruction"] = _obstruction_block(
                obs, {"c1": format_poly(c1), "conic": conic.to_json()})
            report["timings"]["solve_s"] = round(time.time() - t0, 3)
            _write_json(report_path, report)
            print("obstruction: nonzero restriction of the residual cubic "
                  "to the conic")
            print("report written to %s" % report_path)
            return EX_OBSTRUCTION
        split = decompose_cone(inst, rep.witness)
        ci = Ci23Instance(q=rep.witness, c=split.c,
                          surface=_cone_surface(conic),
                          vertex=ProjPoint([0] * 6 + [1]), conic=conic)
        phi = ci23_parametrize(ci, seed=args.seed)
        psi = parametrize_Y4(inst, conic, seed=args.seed)
        report["certificates"].append(
            check_on_variety(phi, ci.q, seed=args.seed).to_json())
        report["certificates"].append(
            check_on_variety(phi, ci.c, seed=args.seed).to_json())
        report["certificates"].append(
            check_dominant(phi, 4, seed=args.seed).to_json())
        report["certificates"].append(
            check_on_variety(psi, inst.F, seed=args.seed).to_json())
        report["certificates"].append(
            check_dominant(psi, 4, seed=args.seed).to_json())
        out_map = psi
    else:
        res = parametrize_H4(inst, conic, seed=args.seed)
        if isinstance(res, ObstructionReport):
            report["outcome"] = "Obstruction"
            report["obstruction"] = _obstruction_block(
                res, {"parameters": ["b%d" % i for i in range(6, inst.n + 1)],
                      "conic": conic.to_json()})
            report["timings"]["solve_s"] = round(time.time() - t0, 3)
            _write_json(report_path, report)
            print("obstruction: the residual cubic misses the conic for "
                  "every section parameter")
            print("report written to %s" % report_path)
            return EX_OBSTRUCTION
        report["certificates"].append(
            check_on_variety(res, inst.F, seed=args.seed).to_json())
        report["certificates"].append(
            check_dominant(res, inst.n - 1, seed=args.seed).to_json())
        out_map = res
    report["timings"]["total_s"] = round(time.time() - t0, 3)
    with open(args.out, "w") as fh:
        fh.write(out_map.serialize())
        fh.write("\n")
    report["outcome"] = "Success"
    report["slp"] = {"in_arity": out_map.in_arity, "out_arity": out_map.out_arity,
                     "nodes": len(out_map.nodes), "chart": out_map.chart}
    _write_json(report_path, report)
    print("wrote a %d-parameter program with %d nodes to %s"
          % (out_map.in_arity, len(out_map.nodes), args.out))
    print("%d certificates embedded in %s" % (len(report["certificates"]),
                                              report_path))
    return EX_OK


# -- verify / replay -----------------------------------------------------------------


def cmd_verify(args):
    with open(args.slp) as fh:
        slp = SlpMap.from_json(json.load(fh))
    inst = load_instance(args.instance)
    try:
        cert = check_on_variety(slp, inst.F, seed=args.seed)
        print("on-variety: pass (%s mode)" % cert.mode)
        dom = check_dominant(slp, slp.in_arity, seed=args.seed)
        print("dominance: pass (rank %d)" % dom.rank)
    except (IdentityFails, RankDeficient) as err:
        print("verification failed: %s" % err)
        return EX_CERTFAIL
    return EX_OK


def _replay_obstruction(block):
    """Recompute the stored obstruction coefficients when the report carries
    the rational data (c1 and the conic) needed to do so."""
    if "c1" not in block or "conic" not in block:
        return "structural"
    conic = SlpMap.from_json(block["conic"])
    c1 = parse_poly(block["c1"], nvars=6)
    gamma = list(_conic_polys(conic)) + [MPoly.zero(1, QQ)]
    comp = _compose_poly(c1, gamma)
    coeffs = _univariate_coeffs(comp, 6)
    if [QQ.format(c) for c in coeffs] != list(block["obstruction"]):
        raise ReplayRejected("stored obstruction does not match c1 on the conic")
    return "recomputed"


def cmd_replay(args):
    with open(args.report) as fh:
        report = json.load(fh)
    count = 0
    try:
        for doc in report.get("certificates", []):
            kind = replay_certificate(doc)
            count += 1
            print("certificate %d (%s): accepted" % (count, kind))
        if report.get("outcome") == "Obstruction":
            how = _replay_obstruction(report.get("obstruction", {}))
            print("obstruction block: %s check passed" % how)
    except ReplayRejected as err:
        print("replay rejected: %s" % err)
        return EX_CERTFAIL
    print("replay accepted (%d certificates)" % count)
    return EX_OK


# -- experiment ----------------------------------------------------------------------


def cmd_experiment(args):
    if args.what != "lemma-singdim":
        raise _UsageError("unknown experiment %r" % args.what)
    rep = singular_dimension_experiment(trials=args.trials, p=args.prime,
                                        seed=args.seed, jobs=args.jobs)
    print("singular-dimension experiment: d=%(d)d N=%(N)d k=%(k)d p=%(p)d "
          "trials=%(trials)d" % rep)
    print("predicted projective dimension: %d" % rep["predicted_dimension"])
    for dim, cnt in sorted(rep["dimension_counts"].items(), key=lambda kv: int(kv[0])):
        print("  dim %s: %d trials" % (dim, cnt))
    print("matches: %d/%d (fraction %s), ceiling aborts: %d"
          % (rep["matches"], rep["completed"], rep["fraction"],
             rep["ceiling_exceeded"]))
    if args.report:
        doc = _new_report("experiment", args.seed)
        doc["outcome"] = "Success"
        doc["experiment"] = rep
        _write_json(args.report, doc)
        print("report written to %s" % args.report)
    return EX_OK


# -- entry point ---------------------------------------------------------------------


def _build_parser():
    parser = _Parser(prog="unirat",
                     description="exact parametrization and certification "
                                 "toolkit for doubled quartics")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-example", parents=[], help="write a doubled "
                       "quartic instance file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", default="1/16")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=["seeded", "cubes"], default="seeded")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_example)

    p = sub.add_parser("certify", help="smoothness mod p plus real positivity "
                       "on a hyperplane")
    p.add_argument("--instance", required=True)
    p.add_argument("--prime", type=int, action="append")
    p.add_argument("--gamma-chart", default="x4")
    p.add_argument("--ceiling", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("parametrize", help="build the rational parametrization "
                       "or archive the obstruction")
    p.add_argument("--instance", required=True)
    p.add_argument("--conic", default="circle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_parametrize)

    p = sub.add_parser("verify", help="re-check a program against an instance "
                       "from scratch")
    p.add_argument("--slp", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("replay", help="re-check the certificates stored in a "
                       "report")
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("experiment", help="statistical experiments")
    p.add_argument("what")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--prime", type=int, default=10007)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as err:
        print("usage error: %s" % err, file=sys.stderr)
        return EX_USAGE
    except BadPrime as err:
        print("usage error: %s" % err, file=sys.stderr)
        return EX_USAGE
    except NotEmptyModP as err:
        print("inconclusive: %s" % err, file=sys.stderr)
        return EX_INCONCLUSIVE
    except (IdentityFails, RankDeficient, AbsorptionFails, ReplayRejected) as err:
        print("certificate failure: %s" % err, file=sys.stderr)
        return EX_CERTFAIL
    except FileNotFoundError as err:
        print("usage error: %s" % err, file=sys.stderr)
        return EX_USAGE
    except (ValueError, KeyError, json.JSONDecodeError) as err:
        print("usage error: %s" % err, file=sys.stderr)
        return EX_USAGE
    except Exception as err:  # pragma: no cover - the contract's catch-all
        print("internal error: %s" % err, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
