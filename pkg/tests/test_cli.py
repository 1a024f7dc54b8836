import json

import pytest

from cokerlab import cli
from cokerlab.padic import matrix, write_matrix_text


def write_cfg(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(argv):
    return cli.main(argv)


def csv_body(path):
    """Everything below the timestamp line."""
    return path.read_text().splitlines()[1:]


def load_summary(out):
    return json.loads((out / "summary.json").read_text())


class TestConfigParsing:
    def test_partitions(self):
        assert cli.parse_partition("0") == ()
        assert cli.parse_partition("2+1") == (2, 1)
        with pytest.raises(cli.ConfigError):
            cli.parse_partition("1+2")
        with pytest.raises(cli.ConfigError):
            cli.parse_partition("x")

    def test_transforms(self):
        assert cli.parse_transform("shift:3").t == 3
        assert cli.parse_transform("pshift").kind == "pshift"
        assert cli.parse_transform("add:block-rank:2").d == 2
        with pytest.raises(cli.ConfigError):
            cli.parse_transform("add:diag")
        with pytest.raises(cli.ConfigError):
            cli.parse_transform("shift")

    def test_load_config_errors(self, tmp_path):
        bad = write_cfg(tmp_path, "bad.cfg", "p 2\n")
        with pytest.raises(cli.ConfigError):
            cli.load_config(bad)

    def test_comments_and_hash_stability(self, tmp_path):
        a = cli.load_config(write_cfg(tmp_path, "a.cfg", "p = 2  # prime\nk = 3\n"))
        b = cli.load_config(write_cfg(tmp_path, "b.cfg", "k = 3\np = 2\n"))
        assert a == b
        assert cli.config_hash(a) == cli.config_hash(b)


class TestTheory:
    def test_marginal_and_pshift(self, tmp_path):
        cfg = write_cfg(
            tmp_path, "t.cfg", "mode = marginal\np = 2\nu = 0\ntargets = 0 ; 1\n"
        )
        out = tmp_path / "out"
        assert run(["theory", "--config", cfg, "--out", str(out)]) == 0
        body = csv_body(out / "theory.csv")
        assert body[1] == "target,symbolic,float"
        assert body[2].startswith("0,(1)*cinf(2)^1,0.2887880950")
        cfg2 = write_cfg(
            tmp_path, "t2.cfg", "mode = pshift\np = 2\ntargets = 1,1+1\n"
        )
        assert run(["theory", "--config", cfg2, "--out", str(out)]) == 0
        assert csv_body(out / "theory.csv")[2] == "1|1+1,0,0.0"

    def test_empty_targets(self, tmp_path):
        cfg = write_cfg(tmp_path, "t.cfg", "mode = marginal\np = 2\ntargets =\n")
        out = tmp_path / "out"
        assert run(["theory", "--config", cfg, "--out", str(out)]) == 0
        assert len(csv_body(out / "theory.csv")) == 2  # hash line + header only

    def test_bad_mode(self, tmp_path):
        cfg = write_cfg(tmp_path, "t.cfg", "mode = wat\np = 2\ntargets = 0\n")
        assert run(["theory", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


SIM_CFG = """
p = 2
k = 3
u = 0
n = 30
trials = {trials}
sampler = haar
transforms = shift:0 pshift
targets = 0,0 ; 1,1
seed = 21
"""


class TestSimulate:
    def test_small_run_passes(self, tmp_path):
        cfg = write_cfg(tmp_path, "s.cfg", SIM_CFG.format(trials=3000))
        out = tmp_path / "out"
        code = run(["simulate", "--config", cfg, "--out", str(out), "--workers", "2"])
        assert code == 0
        summary = load_summary(out)
        assert summary["passed"] is True
        header = csv_body(out / "cells.csv")[1]
        assert header == "n,tuple,count,freq,stderr,theory,z"

    def test_zero_trials(self, tmp_path):
        cfg = write_cfg(tmp_path, "s.cfg", SIM_CFG.format(trials=0))
        out = tmp_path / "out"
        assert run(["simulate", "--config", cfg, "--out", str(out)]) == 0
        assert len(csv_body(out / "cells.csv")) == 2  # hash line + header only

    def test_precision_error_names_target(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path,
            "s.cfg",
            "p = 2\nk = 2\nu = 0\nn = 10\ntrials = 10\nsampler = haar\n"
            "transforms = shift:0\ntargets = 2\nseed = 1\n",
        )
        assert run(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "precision too low" in capsys.readouterr().err

    def test_worker_invariance_byte_for_byte(self, tmp_path):
        cfg = write_cfg(tmp_path, "s.cfg", SIM_CFG.format(trials=400))
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert run(["simulate", "--config", cfg, "--out", str(out1), "--workers", "1"]) == 0
        assert run(["simulate", "--config", cfg, "--out", str(out2), "--workers", "2"]) == 0
        assert csv_body(out1 / "cells.csv") == csv_body(out2 / "cells.csv")

    def test_rerun_from_embedded_config(self, tmp_path):
        cfg = write_cfg(tmp_path, "s.cfg", SIM_CFG.format(trials=300))
        out1 = tmp_path / "o1"
        run(["simulate", "--config", cfg, "--out", str(out1)])
        echoed = load_summary(out1)["config"]
        cfg2 = write_cfg(
            tmp_path, "echo.cfg", "".join(f"{k} = {v}\n" for k, v in echoed.items())
        )
        out2 = tmp_path / "o2"
        run(["simulate", "--config", cfg2, "--out", str(out2)])
        assert csv_body(out1 / "cells.csv") == csv_body(out2 / "cells.csv")

    def test_seed_override_changes_hash_and_body(self, tmp_path):
        cfg = write_cfg(tmp_path, "s.cfg", SIM_CFG.format(trials=400))
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        run(["simulate", "--config", cfg, "--out", str(out1)])
        run(["simulate", "--config", cfg, "--out", str(out2), "--seed", "99"])
        b1, b2 = csv_body(out1 / "cells.csv"), csv_body(out2 / "cells.csv")
        assert b1[0] != b2[0]  # config hash differs
        assert b1[1:] != b2[1:]


class TestTheoryAttachment:
    def test_unit_shift_with_pshift_is_independent(self, tmp_path):
        # (A + I, A + 2I) decouples; only (A + t*I, A + pI) with p | t
        # (and t*I != p*I) gets the common-rank pair law
        from cokerlab.cli import _theory_for, build_plan

        base = "p = 2\nk = 3\nu = 0\nn = 10\ntrials = 1\nsampler = haar\nseed = 0\n"
        z2z2 = "targets = 1,1\n"
        plan = build_plan(cli.load_config(write_cfg(
            tmp_path, "a.cfg", base + z2z2 + "transforms = shift:1 pshift\n")))
        (d,) = _theory_for(plan, plan.targets).values()
        assert d.cinf_power == 2  # independent product law
        plan = build_plan(cli.load_config(write_cfg(
            tmp_path, "b.cfg", base + z2z2 + "transforms = shift:0 pshift\n")))
        (d,) = _theory_for(plan, plan.targets).values()
        assert d.cinf_power == 1  # common-rank pair law
        plan = build_plan(cli.load_config(write_cfg(
            tmp_path, "c.cfg", base + z2z2 + "transforms = shift:2 pshift\n")))
        (d,) = _theory_for(plan, plan.targets).values()
        assert d is None  # same matrix twice: no product-form law


class TestMoment:
    def test_pshift_pair(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "m.cfg",
            "p = 2\nk = 1\nu = 0\nn = 40\ntrials = 4000\nsampler = haar\n"
            "transforms = shift:0 pshift\nh = 1,1\nseed = 5\n",
        )
        out = tmp_path / "out"
        assert run(["moment", "--config", cfg, "--out", str(out)]) == 0
        row = csv_body(out / "moments.csv")[2].split(",")
        assert row[1] == "1|1"
        assert abs(float(row[4]) - 2.0) < 1e-12  # theory column = N(1,1)


class TestInvert:
    def test_unit_roundtrip(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "i.cfg",
            "p = 2\nk = 2\nm = 2\nr = 1\nmoments = unit\ncompare = cohen-lenstra\n",
        )
        out = tmp_path / "out"
        assert run(["invert", "--config", cfg, "--out", str(out)]) == 0
        summary = load_summary(out)
        assert summary["round_trip_residual"] == "0/1"
        assert float(summary["l1_vs_cohen_lenstra"]) < 0.5

    def test_csv_source_and_missing_cell(self, tmp_path):
        good = tmp_path / "moments.csv"
        good.write_text("coord_1,value\n0,1/1\n1,1/1\n")
        cfg = write_cfg(
            tmp_path, "i.cfg", f"p = 2\nk = 1\nm = 1\nr = 1\nmoments = {good}\n"
        )
        out = tmp_path / "out"
        assert run(["invert", "--config", cfg, "--out", str(out)]) == 0
        bad = tmp_path / "bad.csv"
        bad.write_text("coord_1,value\n0,1/1\n")
        cfg2 = write_cfg(
            tmp_path, "i2.cfg", f"p = 2\nk = 1\nm = 1\nr = 1\nmoments = {bad}\n"
        )
        assert run(["invert", "--config", cfg2, "--out", str(out)]) == 2

    def test_recovered_weights_match_direct_inversion(self, tmp_path):
        cfg = write_cfg(
            tmp_path, "i.cfg", "p = 2\nk = 2\nm = 2\nr = 1\nmoments = unit\n"
        )
        out = tmp_path / "out"
        run(["invert", "--config", cfg, "--out", str(out)])
        rows = {l.split(",")[0]: l.split(",")[1] for l in csv_body(out / "recovered.csv")[2:]}
        assert rows["0"] == "1/3" and rows["1"] == "1/4"


class TestNonabelian:
    def test_moments_table(self, tmp_path):
        cfg = write_cfg(
            tmp_path, "n.cfg", "op = moments\ngroup = S3\nn = 1..4\nu = 0\n"
        )
        out = tmp_path / "out"
        assert run(["nonabelian", "--config", cfg, "--out", str(out)]) == 0
        rows = csv_body(out / "nonabelian.csv")[2:]
        assert rows[1].startswith("2,S3,1/2,")

    def test_trivial_group_all_ones(self, tmp_path):
        cfg = write_cfg(
            tmp_path, "n.cfg", "op = moments\ngroup = C1\nn = 1 2 3\nu = 0\n"
        )
        out = tmp_path / "out"
        assert run(["nonabelian", "--config", cfg, "--out", str(out)]) == 0
        for row in csv_body(out / "nonabelian.csv")[2:]:
            assert row.split(",")[2] == "1/1"

    def test_pairsets_identity(self, tmp_path):
        cfg = write_cfg(
            tmp_path, "n.cfg", "op = pairsets\ngroup1 = S3\ngroup2 = C2\nn = 2\n"
        )
        out = tmp_path / "out"
        assert run(["nonabelian", "--config", cfg, "--out", str(out)]) == 0
        summary = load_summary(out)
        assert summary["total"] == summary["sur_product"] == 18 * 3

    def test_guard_exceeded_clean_error(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path,
            "n.cfg",
            "op = pair\ngroup1 = S3\ngroup2 = S3\nn = 12\nu = 0\nwords = identity\n",
        )
        assert run(["nonabelian", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "guard" in capsys.readouterr().err


class TestSnf:
    def test_prints_exponents(self, tmp_path, capsys):
        mat_path = tmp_path / "m.txt"
        write_matrix_text(matrix(2, 4, [[2, 0], [0, 8]]), mat_path)
        cfg = write_cfg(tmp_path, "s.cfg", f"matrix = {mat_path}\n")
        assert run(["snf", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
        out = capsys.readouterr().out
        assert "snf exponents: 1 3" in out
        assert "cokernel type: 3+1" in out

    def test_missing_matrix(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "s.cfg", "matrix = /nope/void.txt\n")
        assert run(["snf", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
