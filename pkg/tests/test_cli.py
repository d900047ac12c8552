"""Command-line interface: run, verify, transform, benchmark."""

import json

import numpy as np

from kldesign import cli
from kldesign.benchmarks import (cubic_quadratic_optimum, logistic_space,
                                 verify_inner_config)
from kldesign.designs import Design, DesignSpace
from kldesign.inner import minimize_beta2

BASE_MODEL = """\
model:
  kind: gaussian-regression
  beta1: [0, 0, 0, 1]
  sigma2: 0.5
  rival_exponents: [0, 1, 2]
  beta2_box:
    lower: [-5, -5, -5]
    upper: [5, 5, 5]
space:
  lower: [-1]
  upper: [1]
"""

START_DESIGN = """\
initial_design:
  points: [[-1.0], [-0.6], [0.1], [0.8]]
  weights: [0.25, 0.25, 0.25, 0.25]
"""

LOGISTIC_MODEL = """\
model:
  kind: logistic-glm
  beta1: [1, 1, 1]
  rival_exponents: [1, 2]
  beta2_box:
    lower: [-10, -10]
    upper: [10, 10]
space:
  lower: [0]
  upper: [1]
initial_design:
  points: [[0.0], [0.3333333333333333], [0.6666666666666666], [1.0]]
  weights: [0.25, 0.25, 0.25, 0.25]
inner:
  multistart_count: 4
"""

REGULARIZATION = """\
regularization:
  gamma: 0.05
"""


def write(path, text):
    path.write_text(text)
    return str(path)


def design_file(tmp_path, design, name="design.json"):
    path = tmp_path / name
    path.write_text(json.dumps(design.as_dict()))
    return str(path)


class TestRun:
    def test_benchmark_run_reaches_the_optimum(self, tmp_path):
        cfg = write(tmp_path / "run.yaml", BASE_MODEL + START_DESIGN +
                    "seed: 11\nalgorithm:\n  delta: 0.97\n  max_iterations: 300\n"
                    "inner:\n  multistart_count: 4\n")
        rc = cli.main(["run", cfg, "--output-dir", str(tmp_path / "out"), "--quiet"])
        assert rc == 0
        result = json.loads((tmp_path / "out" / "result.json").read_text())
        assert result["termination_reason"] == "efficiency-reached"
        assert (tmp_path / "out" / "iterations.csv").exists()
        final = Design.from_dict(
            json.loads((tmp_path / "out" / "final_design.json").read_text()))
        assert final.size >= 3

    def test_shipped_benchmark_config_reaches_the_optimum(self, tmp_path):
        # the annotated example config, verbatim, at its delta = 0.99
        from pathlib import Path

        from kldesign.designs import wasserstein_distance
        cfg = str(Path(__file__).resolve().parent.parent
                  / "demos" / "configs" / "cubic_vs_quadratic.yaml")
        rc = cli.main(["run", cfg, "--output-dir", str(tmp_path / "out"), "--quiet"])
        assert rc == 0
        final = Design.from_dict(
            json.loads((tmp_path / "out" / "final_design.json").read_text()))
        assert wasserstein_distance(final, cubic_quadratic_optimum()) <= 0.02

    def test_budget_exhaustion_exits_2(self, tmp_path):
        cfg = write(tmp_path / "run.yaml", BASE_MODEL + START_DESIGN +
                    "algorithm:\n  delta: 0.999999\n  max_iterations: 5\n"
                    "inner:\n  multistart_count: 2\n")
        rc = cli.main(["run", cfg, "--output-dir", str(tmp_path / "out"), "--quiet"])
        assert rc == 2

    def test_invalid_weight_sum_exits_1_and_names_the_field(self, tmp_path, capsys):
        bad = START_DESIGN.replace("0.25, 0.25, 0.25, 0.25", "0.2, 0.2, 0.25, 0.25")
        cfg = write(tmp_path / "run.yaml", BASE_MODEL + bad)
        rc = cli.main(["run", cfg, "--output-dir", str(tmp_path / "out"), "--quiet"])
        assert rc == 1
        err = capsys.readouterr().err
        assert "initial_design" in err and "weight sum" in err

    def test_missing_config_exits_1(self, tmp_path, capsys):
        rc = cli.main(["run", str(tmp_path / "nope.yaml"), "--quiet"])
        assert rc == 1
        assert "does not exist" in capsys.readouterr().err

    def test_initial_design_from_file(self, tmp_path):
        start = Design(DesignSpace([-1.0], [1.0]),
                       [[-1.0], [-0.6], [0.1], [0.8]], [0.25] * 4)
        design_file(tmp_path, start, name="start.json")
        cfg = write(tmp_path / "run.yaml", BASE_MODEL +
                    "initial_design: start.json\n"
                    "algorithm:\n  delta: 0.8\n  max_iterations: 60\n"
                    "inner:\n  multistart_count: 2\n")
        rc = cli.main(["run", cfg, "--output-dir", str(tmp_path / "out"), "--quiet"])
        assert rc == 0

    def test_missing_design_file_names_it(self, tmp_path, capsys):
        cfg = write(tmp_path / "run.yaml", BASE_MODEL +
                    "initial_design: absent.json\n")
        rc = cli.main(["run", cfg, "--quiet"])
        assert rc == 1
        assert "absent.json" in capsys.readouterr().err

    def test_logistic_without_regularization_stalls(self, tmp_path):
        cfg = write(tmp_path / "run.yaml", LOGISTIC_MODEL +
                    "algorithm:\n  delta: 0.995\n  max_iterations: 50\n")
        rc = cli.main(["run", cfg, "--output-dir", str(tmp_path / "out"), "--quiet"])
        assert rc == 3

    def test_logistic_with_regularization_succeeds(self, tmp_path):
        cfg = write(tmp_path / "run.yaml", LOGISTIC_MODEL + REGULARIZATION +
                    "algorithm:\n  delta: 0.995\n  max_iterations: 10\n")
        rc = cli.main(["run", cfg, "--output-dir", str(tmp_path / "out"), "--quiet"])
        assert rc == 0
        result = json.loads((tmp_path / "out" / "result.json").read_text())
        assert result["regularized"] is True
        final = Design.from_dict(result["final_design"])
        assert final.weight_at([0.0]) >= 0.95

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write(tmp_path / "run.yaml", BASE_MODEL + START_DESIGN +
                    "seed: 1\nalgorithm:\n  delta: 0.9\n  max_iterations: 10\n"
                    "inner:\n  multistart_count: 2\n")
        outs, codes = [], []
        for i, seed in enumerate(("123", "123")):
            outdir = tmp_path / f"out{i}"
            rc = cli.main(["run", cfg, "--seed", seed, "--output-dir",
                           str(outdir), "--quiet"])
            codes.append(rc)
            outs.append((outdir / "iterations.csv").read_bytes())
        assert codes[0] == codes[1]
        assert outs[0] == outs[1]

    def test_round_trip_criterion_value(self, tmp_path):
        cfg = write(tmp_path / "run.yaml", BASE_MODEL + START_DESIGN +
                    "algorithm:\n  delta: 0.95\n  max_iterations: 200\n"
                    "inner:\n  multistart_count: 4\n")
        rc = cli.main(["run", cfg, "--output-dir", str(tmp_path / "out"), "--quiet"])
        assert rc == 0
        result = json.loads((tmp_path / "out" / "result.json").read_text())
        final = Design.from_dict(
            json.loads((tmp_path / "out" / "final_design.json").read_text()))
        from kldesign.benchmarks import cubic_quadratic_pair
        sol = minimize_beta2(cubic_quadratic_pair(), final, verify_inner_config())
        assert abs(sol.value - result["final_value"]) <= max(
            1e-12, 1e-10 * result["final_value"])


class TestVerify:
    def test_certifies_the_optimum(self, tmp_path):
        cfg = write(tmp_path / "cfg.yaml", BASE_MODEL)
        dpath = design_file(tmp_path, cubic_quadratic_optimum())
        rc = cli.main(["verify", cfg, dpath, "--output-dir", str(tmp_path / "out"),
                       "--quiet"])
        assert rc == 0
        cert = json.loads((tmp_path / "out" / "certificate.json").read_text())
        assert cert["verdict"] == "certified"
        curve = (tmp_path / "out" / "psi_curve.csv").read_text().strip().split("\n")
        assert curve[0] == "x1,psi"

    def test_rejects_uniform_weights(self, tmp_path):
        cfg = write(tmp_path / "cfg.yaml", BASE_MODEL)
        opt = cubic_quadratic_optimum()
        dpath = design_file(tmp_path, Design(opt.space, opt.points, [0.25] * 4))
        rc = cli.main(["verify", cfg, dpath, "--output-dir", str(tmp_path / "out"),
                       "--quiet"])
        assert rc == 4

    def test_singular_design_without_gamma_exits_5(self, tmp_path):
        cfg = write(tmp_path / "cfg.yaml", LOGISTIC_MODEL)
        d0 = Design(logistic_space(), [[0.0]], [1.0])
        rc = cli.main(["verify", cfg, design_file(tmp_path, d0),
                       "--output-dir", str(tmp_path / "out"), "--quiet"])
        assert rc == 5

    def test_singular_design_with_gamma_certifies(self, tmp_path):
        cfg = write(tmp_path / "cfg.yaml", LOGISTIC_MODEL + REGULARIZATION)
        d0 = Design(logistic_space(), [[0.0]], [1.0])
        rc = cli.main(["verify", cfg, design_file(tmp_path, d0),
                       "--output-dir", str(tmp_path / "out"), "--quiet"])
        assert rc == 0
        rows = (tmp_path / "out" / "psi_curve.csv").read_text().strip().split("\n")[1:]
        psi = np.array([float(r.split(",")[1]) for r in rows])
        assert np.all(psi <= 1e-6)


class TestTransform:
    def test_rescale_benchmark_design(self, tmp_path, capsys):
        dpath = design_file(tmp_path, cubic_quadratic_optimum())
        rc = cli.main(["transform", dpath, "--offset", "2", "--matrix", "4"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert [p[0] for p in out["points"]] == [-2.0, 0.0, 4.0, 6.0]

    def test_identity(self, tmp_path, capsys):
        dpath = design_file(tmp_path, cubic_quadratic_optimum())
        rc = cli.main(["transform", dpath, "--offset", "0", "--matrix", "1"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert [p[0] for p in out["points"]] == [-1.0, -0.5, 0.5, 1.0]

    def test_singular_matrix_exits_1(self, tmp_path, capsys):
        dpath = design_file(tmp_path, cubic_quadratic_optimum())
        rc = cli.main(["transform", dpath, "--offset", "0", "--matrix", "0"])
        assert rc == 1
        assert "singular" in capsys.readouterr().err

    def test_output_file(self, tmp_path):
        dpath = design_file(tmp_path, cubic_quadratic_optimum())
        target = tmp_path / "transformed.json"
        rc = cli.main(["transform", dpath, "--offset", "2", "--matrix", "4",
                       "--output", str(target)])
        assert rc == 0
        assert json.loads(target.read_text())["space"]["lower"] == [-2.0]


class TestBenchmarkCommand:
    def test_list_prints_fixture_names(self, capsys):
        rc = cli.main(["benchmark", "--list"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "benchmark-optimum" in out
        assert "cli-determinism" in out

    def test_corrupted_tolerance_fails(self):
        # the discontinuity gap cannot reach 0.9e9
        rc = cli.main(["benchmark", "--only", "discontinuity-gap",
                       "--tolerance-scale", "1e9", "--quiet"])
        assert rc != 0

    def test_cheap_fixture_passes(self):
        rc = cli.main(["benchmark", "--only", "discontinuity-gap", "--quiet"])
        assert rc == 0

    def test_unknown_fixture_rejected(self, capsys):
        rc = cli.main(["benchmark", "--only", "nope"])
        assert rc == 1
        assert "unknown fixture" in capsys.readouterr().err
