import json

import numpy as np
import pytest

from minisplit import cli
from minisplit.bench import (
    compare,
    method_for_problem,
    required_forward_count,
    run_experiment,
)
from minisplit.errors import DivergenceError, ParameterError
from minisplit.params import params_from_dict, save_params
from minisplit.problems import PortfolioProblemConfig, ToyProblemConfig, gen_toy_problem


@pytest.fixture(scope="module")
def toy():
    cfg = ToyProblemConfig(n=4, d=6, p=8, m=3, seed=0)
    return cfg, gen_toy_problem(cfg)


class TestMethodRegistry:
    def test_forward_counts(self):
        assert required_forward_count("sfb+", 5) is None
        assert required_forward_count("drs", 5) == 0
        assert required_forward_count("gfb", 5) == 4
        assert required_forward_count("agfb", 5) == 10
        with pytest.raises(ParameterError):
            required_forward_count("nope", 5)

    def test_mismatch_rejected(self):
        cfg = ToyProblemConfig(n=4, d=6, p=8, m=2, seed=0)
        with pytest.raises(ParameterError):
            method_for_problem("gfb", gen_toy_problem(cfg))  # needs m = n-1 = 3

    def test_two_resolvent_methods_need_two_blocks(self, toy):
        _, prob = toy
        with pytest.raises(ParameterError):
            method_for_problem("dy", prob)

    def test_same_seed_shares_design(self, toy):
        _, prob = toy
        a = method_for_problem("sfb+", prob, design_seed=5)
        b = method_for_problem("sfb+randp", prob, design_seed=5)
        np.testing.assert_array_equal(a.params.causal.H, b.params.causal.H)
        np.testing.assert_array_equal(a.params.M, b.params.M)
        assert b.params.P.shape[1] > 0
        top = np.linalg.svd(b.params.P, compute_uv=False)[0]
        assert abs(top**2 - 0.5) < 1e-10


class TestRunExperiment:
    def test_csv_and_sidecar(self, toy, tmp_path):
        cfg, prob = toy
        desc = method_for_problem("sfb+", prob, design_seed=1)
        out = tmp_path / "run.csv"
        report = run_experiment(desc, prob, 30, 1, out, config={"kind": "toy"})
        lines = out.read_text().splitlines()
        assert lines[0] == "iter,fp_residual,variance,objective,elapsed_ms"
        assert len(lines) == report.iterations + 1
        assert all(line.endswith(",") for line in lines[1:])  # no wall times by default
        sidecar = json.loads((tmp_path / "run.json").read_text())
        assert sidecar["config"] == {"kind": "toy"}
        assert sidecar["validation"]["passed"] is True
        rebuilt = params_from_dict(sidecar["params"])
        np.testing.assert_array_equal(rebuilt.S, desc.params.S)

    def test_deterministic_bytes(self, toy, tmp_path):
        cfg, prob = toy
        desc = method_for_problem("sfb+", prob, design_seed=2)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_experiment(desc, prob, 25, 7, a)
        run_experiment(desc, prob, 25, 7, b)
        assert a.read_bytes() == b.read_bytes()

    def test_timing_opt_in(self, toy, tmp_path):
        cfg, prob = toy
        desc = method_for_problem("sfb+", prob, design_seed=2)
        out = tmp_path / "t.csv"
        run_experiment(desc, prob, 5, 7, out, timing=True)
        first = out.read_text().splitlines()[1]
        assert not first.endswith(",")


class TestCompare:
    def test_single_method_single_repeat_matches_run(self, tmp_path):
        cfg = ToyProblemConfig(n=4, d=6, p=8, m=3, seed=11)
        summary = compare(["sfb+"], cfg, 1, tmp_path / "cmp",
                          iters=200, reference_iters=3000)
        stats = summary["methods"]["sfb+"]
        assert summary["repeats"] == 1
        assert len(stats["final_records"]) == 1
        rec = stats["final_records"][0]
        sidecar = json.loads((tmp_path / "cmp" / "sfbplus" / "rep000.json").read_text())
        assert sidecar["final"]["iterations"] == rec["iterations"]
        assert sidecar["final"]["fp_residual"] == rec["fp_residual"]
        if stats["reached"]:
            assert stats["median_iters_to_threshold"] == stats["iters_to_threshold"][0]

    def test_fixed_seed_reproduces_summary(self, tmp_path):
        cfg = ToyProblemConfig(n=3, d=5, p=6, m=2, seed=21)
        s1 = compare(["sfb+", "sdy"], cfg, 2, tmp_path / "c1", iters=150, reference_iters=2000)
        s2 = compare(["sfb+", "sdy"], cfg, 2, tmp_path / "c2", iters=150, reference_iters=2000)
        assert s1 == s2

    def test_structural_methods_get_their_own_split(self, tmp_path):
        cfg = ToyProblemConfig(n=4, d=5, p=8, m=2, seed=31)
        summary = compare(["gfb"], cfg, 1, tmp_path / "c3", iters=100, reference_iters=1000)
        side = json.loads((tmp_path / "c3" / "gfb" / "rep000.json").read_text())
        assert side["config"]["m"] == 3  # n - 1 despite cfg.m = 2

    def test_empty_method_list_rejected(self, tmp_path):
        with pytest.raises(ParameterError):
            compare([], ToyProblemConfig(), 1, tmp_path / "c4")


def test_portfolio_objective_consistent_across_designs():
    # two independently designed runs of the same instance settle on the
    # same objective value, so the evaluator matches what the methods solve
    from minisplit.bench import execute, reference_solution
    from minisplit.problems import gen_portfolio_problem

    cfg = PortfolioProblemConfig(d=4, p=60, chunks=3, seed=5, turnover_weight=0.01)
    prob = gen_portfolio_problem(cfg)
    f_ref, _ = reference_solution(prob, iters=15_000, design_seed=5)
    desc = method_for_problem("sfb+", prob, design_seed=6)
    report = execute(desc, prob, 15_000, rel_stop=1e-13)
    assert abs(prob.objective(report.consensus) - f_ref) <= 1e-6


class TestCli:
    def test_validate_pass_and_fail(self, toy, tmp_path, capsys):
        _, prob = toy
        desc = method_for_problem("sfb+", prob, design_seed=3)
        good = tmp_path / "good.json"
        save_params(desc.params, good)
        assert cli.main(["validate", "--params", str(good)]) == 0
        doc = json.loads(good.read_text())
        doc["M"] = [1.0] * len(doc["M"])  # destroys the zero-column-sum property
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert cli.main(["validate", "--params", str(bad)]) == 1

    def test_validate_missing_file_is_io_error(self, tmp_path):
        assert cli.main(["validate", "--params", str(tmp_path / "absent.json")]) == 2

    def test_run_toy_with_preset(self, tmp_path, capsys):
        out = tmp_path / "run.csv"
        code = cli.main([
            "run", "--problem", "toy", "--method", "sfb+", "--iters", "40",
            "--seed", "3", "--out", str(out),
            "--n", "3", "--d", "5", "--p", "6", "--m", "2",
        ])
        assert code == 0
        assert out.exists() and (tmp_path / "run.json").exists()
        final = json.loads(capsys.readouterr().out)
        assert final["iterations"] <= 40

    def test_run_with_params_file(self, tmp_path):
        cfg_args = ["--n", "3", "--d", "5", "--p", "6", "--m", "2"]
        prob = gen_toy_problem(ToyProblemConfig(n=3, d=5, p=6, m=2, seed=4))
        desc = method_for_problem("sfb+", prob, design_seed=4)
        pfile = tmp_path / "params.json"
        save_params(desc.params, pfile)
        out = tmp_path / "r.csv"
        code = cli.main([
            "run", "--problem", "toy", "--method", str(pfile), "--iters", "10",
            "--seed", "4", "--out", str(out), *cfg_args,
        ])
        assert code == 0

    def test_run_params_problem_mismatch(self, tmp_path):
        prob = gen_toy_problem(ToyProblemConfig(n=3, d=5, p=6, m=2, seed=4))
        desc = method_for_problem("sfb+", prob, design_seed=4)
        pfile = tmp_path / "params.json"
        save_params(desc.params, pfile)
        code = cli.main([
            "run", "--problem", "toy", "--method", str(pfile), "--iters", "5",
            "--seed", "4", "--out", str(tmp_path / "x.csv"),
            "--n", "5", "--d", "5", "--p", "6", "--m", "2",
        ])
        assert code == 1

    def test_run_portfolio(self, tmp_path):
        out = tmp_path / "p.csv"
        code = cli.main([
            "run", "--problem", "portfolio", "--method", "gfb", "--iters", "30",
            "--seed", "5", "--out", str(out), "--assets", "4", "--days", "40",
            "--chunks", "4",
        ])
        assert code == 0

    def test_bench_writes_summary(self, tmp_path, capsys):
        out = tmp_path / "bench"
        code = cli.main([
            "bench", "--suite", "toy-homo", "--methods", "sfb+,sdy",
            "--repeats", "1", "--seed", "6", "--out", str(out),
            "--iters", "120", "--reference-iters", "1500",
        ])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert set(summary["methods"]) == {"sfb+", "sdy"}

    def test_divergence_exit_code(self, monkeypatch, tmp_path):
        def boom(*args, **kwargs):
            raise DivergenceError("runaway residual")

        monkeypatch.setattr(cli, "run_experiment", boom)
        code = cli.main([
            "run", "--problem", "toy", "--method", "sfb+", "--iters", "5",
            "--seed", "0", "--out", str(tmp_path / "d.csv"),
        ])
        assert code == 3

    def test_bad_returns_csv_is_io_error(self, tmp_path):
        data = tmp_path / "r.csv"
        data.write_text("0.1,0.2\n0.3,bad\n")
        code = cli.main([
            "run", "--problem", "portfolio", "--method", "sfb+", "--iters", "5",
            "--seed", "0", "--out", str(tmp_path / "o.csv"), "--data", str(data),
        ])
        assert code == 2
