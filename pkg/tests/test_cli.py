import io
import json
from contextlib import redirect_stdout
from pathlib import Path

import pytest

from unirat.cli import main
from unirat.mpoly import MPoly
from unirat.exactcore import QQ
from unirat.pipeline import QuarticInstance, save_instance, sphere_form
from unirat.slp import SlpMap

REPO = Path(__file__).resolve().parent.parent
INSTANCES = REPO / "instances"


def quiet(argv):
    """Run a command discarding stdout; fixtures use this so their output
    does not leak into the capture of whichever test triggers them."""
    with redirect_stdout(io.StringIO()):
        return main(argv)


def strip_timings(doc):
    doc = dict(doc)
    doc.pop("timings", None)
    return doc


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def eps0(workdir):
    path = workdir / "eps0.json"
    assert quiet(["build-example", "--n", "8", "--epsilon", "0",
                  "--preset", "cubes", "--out", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def p5_run(workdir):
    """One parametrize run on the shipped reverse-built instance."""
    slp = workdir / "p5.slp.json"
    rep = workdir / "p5.report.json"
    assert quiet(["parametrize", "--instance", str(INSTANCES / "reverse_p5.json"),
                  "--out", str(slp), "--report", str(rep)]) == 0
    return slp, rep


# -- build-example -------------------------------------------------------------


def test_build_example_writes_instance(workdir, capsys):
    out = workdir / "n8.json"
    code = main(["build-example", "--n", "8", "--epsilon", "1/16",
                 "--seed", "0", "--preset", "cubes", "--out", str(out)])
    text = capsys.readouterr().out
    assert code == 0
    assert "4 perturbation cubics" in text
    assert "restricts to f^2" in text
    doc = json.loads(out.read_text())
    assert doc["n"] == 8 and doc["epsilon"] == "1/16"
    assert doc["seeds"] == {"seed": 0, "preset": "cubes"}


def test_build_example_flags_the_singular_case(workdir, capsys):
    assert main(["build-example", "--n", "8", "--epsilon", "0",
                 "--preset", "cubes", "--out", str(workdir / "flag.json")]) == 0
    assert "singular by construction" in capsys.readouterr().out


def test_build_example_usage_errors(workdir, capsys):
    assert main(["build-example", "--n", "7",
                 "--out", str(workdir / "no.json")]) == 64
    assert "n >= 8" in capsys.readouterr().err
    assert main(["build-example", "--n", "8", "--epsilon", "sixteen",
                 "--out", str(workdir / "no.json")]) == 64
    assert not (workdir / "no.json").exists()


# -- certify -------------------------------------------------------------------


def test_certify_inconclusive_on_the_unperturbed_instance(eps0, workdir, capsys):
    rep = workdir / "eps0.report.json"
    code = main(["certify", "--instance", str(eps0), "--report", str(rep)])
    text = capsys.readouterr().out
    assert code == 3
    assert "inconclusive" in text and "projective dimension 3" in text
    doc = json.loads(rep.read_text())
    assert doc["outcome"] == "Inconclusive"
    assert [n["prime"] for n in doc["smoothness_notes"]] == [10007, 10009]


def test_certify_absorption_failure_exit(workdir, capsys):
    inst = workdir / "eps3.json"
    assert quiet(["build-example", "--n", "8", "--epsilon", "3",
                  "--preset", "cubes", "--out", str(inst)]) == 0
    code = main(["certify", "--instance", str(inst)])
    text = capsys.readouterr().out
    assert code == 4
    assert "budget for x0 exhausted" in text
    assert "smaller --epsilon" in text


def test_certify_screens_primes_before_working(eps0, capsys):
    code = main(["certify", "--instance", str(eps0), "--prime", "2"])
    captured = capsys.readouterr()
    assert code == 64
    assert "positivity" not in captured.out  # nothing ran
    assert "odd prime" in captured.err


def test_certify_chart_out_of_range(eps0, capsys):
    assert main(["certify", "--instance", str(eps0),
                 "--gamma-chart", "x9"]) == 64
    capsys.readouterr()


# -- parametrize: the feasible P^5 instance --------------------------------------


def test_parametrize_writes_program_and_report(p5_run):
    slp_path, rep_path = p5_run
    slp = SlpMap.from_json(json.loads(slp_path.read_text()))
    assert (slp.in_arity, slp.out_arity) == (4, 6)
    assert len(slp.nodes) == 853
    doc = json.loads(rep_path.read_text())
    assert doc["outcome"] == "Success"
    kinds = [c["kind"] for c in doc["certificates"]]
    assert kinds == ["on-variety", "on-variety", "dominance",
                     "on-variety", "dominance"]
    assert doc["slp"] == {"in_arity": 4, "out_arity": 6, "nodes": 853,
                          "chart": 0}


def test_parametrize_is_deterministic(p5_run, workdir):
    _, rep_path = p5_run
    rep2 = workdir / "p5.second.report.json"
    assert quiet(["parametrize", "--instance",
                  str(INSTANCES / "reverse_p5.json"),
                  "--out", str(workdir / "p5.second.slp.json"),
                  "--report", str(rep2)]) == 0
    a = strip_timings(json.loads(rep_path.read_text()))
    b = strip_timings(json.loads(rep2.read_text()))
    assert a == b


def test_verify_accepts_the_written_program(p5_run, capsys):
    slp_path, _ = p5_run
    code = main(["verify", "--slp", str(slp_path),
                 "--instance", str(INSTANCES / "reverse_p5.json")])
    text = capsys.readouterr().out
    assert code == 0
    assert "on-variety: pass" in text and "dominance: pass (rank 4)" in text


def test_replay_accepts_then_rejects_after_tampering(p5_run, workdir, capsys):
    _, rep_path = p5_run
    assert main(["replay", "--report", str(rep_path)]) == 0
    doc = json.loads(rep_path.read_text())
    doc["certificates"][2]["rank"] = 3
    bad = workdir / "tampered.report.json"
    bad.write_text(json.dumps(doc))
    capsys.readouterr()
    assert main(["replay", "--report", str(bad)]) == 4
    assert "replay rejected" in capsys.readouterr().out


# -- parametrize: obstructions ----------------------------------------------------


def test_parametrize_obstruction_on_p5(workdir, capsys):
    # F = f^2 + x5 * x0^3: x0^3 restricted to the circle never vanishes
    f6 = sphere_form().extend_variables(6)
    x0 = MPoly.variable(0, 6, QQ)
    x5 = MPoly.variable(5, 6, QQ)
    Y = QuarticInstance(n=5, F=f6 * f6 + x5 * x0 ** 3, f=sphere_form())
    inst = workdir / "obstructed_p5.json"
    save_instance(Y, inst)
    rep = workdir / "obstructed_p5.report.json"
    code = main(["parametrize", "--instance", str(inst),
                 "--out", str(workdir / "obstructed_p5.slp.json"),
                 "--report", str(rep)])
    capsys.readouterr()
    assert code == 2
    assert not (workdir / "obstructed_p5.slp.json").exists()
    doc = json.loads(rep.read_text())
    assert doc["outcome"] == "Obstruction"
    block = doc["obstruction"]
    assert block["obstruction"] == ["1", "0", "-3", "0", "3", "0", "-1"]
    assert block["c1"] == "x0^3"
    assert block["quadrics_through_cone"] == [8, 7]
    # rational reports carry c1 and the conic, so replay recomputes the block
    assert main(["replay", "--report", str(rep)]) == 0
    assert "recomputed" in capsys.readouterr().out
    block["obstruction"][0] = "2"
    bad = workdir / "obstructed_bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["replay", "--report", str(bad)]) == 4


def test_parametrize_obstruction_on_the_pencil(workdir, capsys):
    rep = workdir / "n8.report.json"
    code = main(["parametrize", "--instance", str(INSTANCES / "n8_cubes.json"),
                 "--out", str(workdir / "n8.slp.json"), "--report", str(rep)])
    capsys.readouterr()
    assert code == 2
    doc = json.loads(rep.read_text())
    assert doc["obstruction"]["obstruction"] == [
        "1/16", "0", "-3/16", "1/2*b6", "3/16", "0", "-1/16"]
    assert doc["obstruction"]["parameters"] == ["b6", "b7", "b8"]
    assert main(["replay", "--report", str(rep)]) == 0


# -- experiment and general usage --------------------------------------------------


def test_experiment_smoke(workdir, capsys):
    rep = workdir / "exp.report.json"
    code = main(["experiment", "lemma-singdim", "--trials", "2",
                 "--report", str(rep)])
    text = capsys.readouterr().out
    assert code == 0
    assert "predicted projective dimension: -1" in text
    doc = json.loads(rep.read_text())
    assert doc["experiment"]["matches"] == doc["experiment"]["completed"] == 2


def test_usage_errors(workdir, capsys):
    assert main(["experiment", "time-travel"]) == 64
    assert main(["parametrize", "--instance", str(INSTANCES / "n8_cubes.json"),
                 "--conic", "parabola", "--out", str(workdir / "x.json")]) == 64
    assert main(["certify", "--instance", str(workdir / "missing.json")]) == 64
    assert main(["no-such-command"]) == 64
    capsys.readouterr()
