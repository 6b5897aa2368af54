import csv
import json

import numpy as np
import pytest

from tmcmc import cli
from tmcmc import harness as hs
from tmcmc import scaling as sc


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def small_cfg(tmp_path, **kw):
    base = dict(dims=(2, 5), scales=(2.4,), n_iters=3000, n_chains=3, master_seed=11, output_dir=str(tmp_path))
    base.update(kw)
    return hs.ExperimentConfig(**base)


def test_table_writes_csv_and_complete_manifest(tmp_path):
    rows, code = hs.reproduce_table1(small_cfg(tmp_path))
    assert code == 0 and len(rows) == 4
    table = read_csv(tmp_path / "table1.csv")
    assert list(table[0])[:8] == ["dimension", "scaling", "kernel", "acc", "iact", "ipact", "ajs", "avg_ks"]
    man = json.loads((tmp_path / "manifest.json").read_text())
    on_disk = {p.name for p in tmp_path.iterdir()}
    assert set(man["files"]) == on_disk
    assert len(man["runs"]) == 4 and all(len(r["seeds"]) == 3 for r in man["runs"])
    assert man["config"]["master_seed"] == 11 and "T" in man["started"]


def test_table_deterministic_numeric_payload(tmp_path):
    hs.reproduce_table1(small_cfg(tmp_path / "a"))
    hs.reproduce_table1(small_cfg(tmp_path / "b"))
    strip = lambda rows: [{k: v for k, v in r.items() if k != "wall_clock_ns"} for r in rows]
    assert strip(read_csv(tmp_path / "a" / "table1.csv")) == strip(read_csv(tmp_path / "b" / "table1.csv"))


def test_failing_cell_is_marked_and_others_complete(tmp_path, monkeypatch):
    real = hs.run_cell

    def flaky(cfg, i, d, ell, kind):
        if d == 5 and kind == "rwm":
            raise RuntimeError("boom")
        return real(cfg, i, d, ell, kind)

    monkeypatch.setattr(hs, "run_cell", flaky)
    rows, code = hs.reproduce_table1(small_cfg(tmp_path))
    assert code == 2
    status = {(r["dimension"], r["kernel"]): r["status"] for r in read_csv(tmp_path / "table1.csv")}
    assert status[("5", "rwm")].startswith("failed") and status[("5", "tmcmc")] == "ok"


@pytest.mark.parametrize("d,ell,kind,target,tol", [
    (100, 2.4, "tmcmc", 0.441, 0.01),
    (5, 6.0, "rwm", 0.0277, 0.01),
    (2, 2.4, "rwm", 0.349, 0.015),
])
def test_cell_acceptance_examples(d, ell, kind, target, tol):
    cfg = hs.ExperimentConfig(dims=(d,), scales=(ell,), kernels=(kind,))
    row = hs.run_cell(cfg, 0, d, ell, kind)
    assert row["acc"] == pytest.approx(target, abs=tol)


def test_config_validation():
    with pytest.raises(ValueError):
        hs.ExperimentConfig(kernels=("mala",))
    with pytest.raises(ValueError):
        hs.ExperimentConfig(burn_in_frac=1.0)


def test_speed_curves_csv(tmp_path):
    fam = sc.ScalingFamily(sc.Variant.IID)
    grid = np.linspace(1e-6, 8, 800)
    rows = hs.speed_curves(("tmcmc", "rwm"), fam, grid, tmp_path / "c.csv")
    table = read_csv(tmp_path / "c.csv")
    assert len(table) == 1600 and float(table[0]["speed"]) < 1e-10
    best = {r["kind"]: r["ell"] for r in rows if r["is_argmax"]}
    assert best["tmcmc"] == pytest.approx(2.426, abs=grid[1] - grid[0])


def test_dependent_robustness_ordering():
    fam = sc.ScalingFamily(sc.Variant.DEPENDENT)
    t, r = sc.optimal_scale("tmcmc", fam), sc.optimal_scale("rwm", fam)
    assert r.speed_at_opt > t.speed_at_opt
    rel_t = sc.speed("tmcmc", fam, 1.5 * t.ell_opt) / t.speed_at_opt
    rel_r = sc.speed("rwm", fam, 1.5 * r.ell_opt) / r.speed_at_opt
    assert rel_t > rel_r


def test_timing_benchmark_small(tmp_path):
    rows, means = hs.timing_benchmark([2, 50], 20000, 2, path=tmp_path / "t.csv")
    assert len(rows) == 8 and len(means) == 4
    assert all(r["wall_clock_ns"] > 0 for r in rows)
    assert len(read_csv(tmp_path / "t.csv")) == 12


def test_timing_scales_linearly_and_small_d_comparable():
    dims = [20, 60, 100, 140, 200]
    _, means = hs.timing_benchmark(dims, 100_000, 2)
    for kind in ("tmcmc", "rwm"):
        ns = [m["ns_per_iter"] for m in means if m["kernel"] == kind]
        assert hs.linear_fit_r2(dims, ns) >= 0.95
    _, small = hs.timing_benchmark([2], 200_000, 3)
    a, b = (m["ns_per_iter"] for m in small)
    assert 0.5 <= a / b <= 2.0


def test_limit_study_self_compare_zero(tmp_path):
    cfg = hs.LimitStudyConfig(dims=(5,), n_chains=20, n_sde_paths=20, replicates=1, output_dir=str(tmp_path),
                              self_compare=True)
    hs.run_limit_study(cfg)
    rows = read_csv(tmp_path / "limit_d5_r0.csv")
    assert rows and all(float(r["ks_stat"]) == 0.0 for r in rows)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert set(man["files"]) == {p.name for p in tmp_path.iterdir()}


def test_limit_study_mismatch_fails_before_running(tmp_path, monkeypatch):
    monkeypatch.setattr(hs.kn, "run_ensemble", lambda *a, **k: pytest.fail("ran despite bad config"))
    with pytest.raises(ValueError):
        hs.run_limit_study(hs.LimitStudyConfig(n_chains=100, n_sde_paths=50, output_dir=str(tmp_path)))


def test_output_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv(hs.OUT_ENV, str(tmp_path / "envdir"))
    assert hs.resolve_output_dir(None) == tmp_path / "envdir"
    assert (tmp_path / "envdir").is_dir()


def test_cli_subcommands(tmp_path, capsys):
    assert cli.main(["curves", "--points", "40", "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "speed_curves.csv").exists()
    assert cli.main(["chain", "--dim", "4", "--iters", "500", "--record", "all", "--out", str(tmp_path / "ch")]) == 0
    assert read_csv(tmp_path / "ch" / "trace.csv")[0].keys() >= {"x1", "x4"}
    assert cli.main(["table1", "--dim", "2", "--scale", "2.4", "--iters", "800", "--chains", "2",
                     "--out", str(tmp_path / "t")]) == 0
    assert cli.main(["limit", "--chains", "10", "--sde-paths", "20", "--out", str(tmp_path / "l")]) == 1
    assert cli.main(["chain", "--dim", "3", "--gibbs-c", "2", "--out", str(tmp_path / "bad")]) == 1
    assert cli.main(["chain", "--dim", "6", "--target", "gaussian-measure", "--precondition", "--iters", "300",
                     "--out", str(tmp_path / "gm")]) == 0
    capsys.readouterr()


def test_cli_target_from_config_file(tmp_path):
    ini = tmp_path / "m.ini"
    ini.write_text("[model]\nfamily = iid\nd = 3\nmarginal = logistic\n")
    assert cli.main(["chain", "--dim", "3", "--target", str(ini), "--iters", "200", "--out", str(tmp_path / "o")]) == 0
    assert cli.main(["chain", "--dim", "4", "--target", str(ini), "--iters", "200", "--out", str(tmp_path / "o")]) == 1
