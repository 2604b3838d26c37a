import csv

import pytest

from hetnet_dc.cli import main
from hetnet_dc.engine import (
    PER_MT_COLUMNS,
    SUMMARY_COLUMNS,
    ConfigError,
    ExperimentConfig,
    derive_seed,
    load_config,
    run_experiment,
    with_overrides,
)

SMALL = ExperimentConfig(scenarios=(3,), mt_counts=(9,), slots=300, replications=2, base_seed=5)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_grid_shape_and_columns(tmp_path):
    cfg = with_overrides(SMALL, output=str(tmp_path))
    result = run_experiment(cfg)
    # scp, acp + (dcsp, dcp) x 3 associations, per replication
    assert len(result.records) == 2 * 8
    summary = read_csv(tmp_path / "summary.csv")
    per_mt = read_csv(tmp_path / "per_mt.csv")
    assert list(summary[0]) == SUMMARY_COLUMNS
    assert list(per_mt[0]) == PER_MT_COLUMNS
    assert len(per_mt) == 16 * 9
    acp = [r for r in per_mt if r["run_id"].startswith("s3-m9-acp")]
    assert all(r["a1"] == "all" for r in acp)
    scp = [r for r in per_mt if "-scp-" in r["run_id"]]
    assert all(r["a2"] == "" for r in scp)


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run_experiment(with_overrides(SMALL, output=str(a)))
    run_experiment(with_overrides(SMALL, output=str(b)))
    for name in ("summary.csv", "per_mt.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_seeds_independent_of_grid_order():
    assert derive_seed(1, 3, 30, 0, 0) == derive_seed(1, 3, 30, 0, 0)
    assert derive_seed(1, 3, 30, 0, 0) != derive_seed(1, 3, 30, 1, 0)
    one = run_experiment(with_overrides(SMALL, mt_counts=(9,)), write=False)
    two = run_experiment(with_overrides(SMALL, mt_counts=(6, 9)), write=False)
    pick = lambda res: [(r.run_id, r.metrics.pf_utility) for r in res.records if r.num_mts == 9]
    assert pick(one) == pick(two)


def test_procedures_share_the_drop():
    res = run_experiment(SMALL, write=False)
    seeds = {(r.replication, r.topology_seed, r.fading_seed) for r in res.records}
    assert len(seeds) == 2


def test_topology_reuse_when_not_redrawn():
    res = run_experiment(with_overrides(SMALL, redraw_topology=False), write=False)
    assert len({r.topology_seed for r in res.records}) == 1
    assert len({r.fading_seed for r in res.records}) == 2


def test_sync_events_and_conservation():
    cfg = with_overrides(SMALL, slots=260, replications=1)
    res = run_experiment(cfg, write=False)
    for r in res.records:
        expected = {"dcp": 260 // 25, "acp": 260, "scp": 0, "dcsp": 0}[r.procedure]
        assert r.metrics.sync_events == expected
        assert r.metrics.throughput.sum() * r.slots == pytest.approx(r.served_by_bs.sum(), rel=1e-12)


def test_config_file_roundtrip(tmp_path):
    ini = tmp_path / "exp.ini"
    ini.write_text(
        "[experiment]\nscenarios = 2, 4\nmt_counts = 12\nprocedures = scp, dcp\n"
        "associations = sm\nslots = 50\nreplications = 1\nbase_seed = 9\nredraw_topology = no\n"
        "[scheduling]\ngamma = 0.02\nsync_period = 10\n"
        "[association]\nh1 = 6\nbigu_max_rounds = none\n"
        "[topology]\npico_radius = 60\n"
        "[radio]\nnoise_figure_db = 7\n"
        f"[output]\ndirectory = {tmp_path / 'out'}\n"
    )
    cfg = load_config(ini)
    assert cfg.scenarios == (2, 4) and cfg.mt_counts == (12,)
    assert cfg.procedures == ("scp", "dcp") and cfg.associations == ("sm",)
    assert cfg.scheduler.gamma == 0.02 and cfg.scheduler.sync_period == 10
    assert cfg.association_params.h1 == 6 and cfg.association_params.bigu_max_rounds is None
    assert cfg.pico_radius == 60 and cfg.radio.noise_figure_db == 7
    assert not cfg.redraw_topology
    run_experiment(cfg)
    assert len(read_csv(tmp_path / "out" / "summary.csv")) == 4


@pytest.mark.parametrize("text", [
    "[experiment]\nslots = 0\n",
    "[experiment]\nprocedures = xyz\n",
    "[experiment]\nbogus = 1\n",
    "[nonsense]\na = 1\n",
    "[scheduling]\ngamma = 2\n",
])
def test_config_errors(tmp_path, text):
    ini = tmp_path / "bad.ini"
    ini.write_text(text)
    with pytest.raises(ConfigError):
        run_experiment(load_config(ini), write=False)


# ---------------------------------------------------------------- CLI

def test_cli_smoke(tmp_path, capsys):
    code = main(["--scenario", "1", "--mts", "30", "--procedure", "scp", "--slots", "100",
                 "--reps", "1", "--seed", "7", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    rows = [l for l in out.splitlines() if l.strip().startswith("1 ")]
    assert len(rows) == 1 and "scp" in rows[0]
    assert len(read_csv(tmp_path / "summary.csv")) == 1


def test_cli_rejects_unknown_procedure(capsys):
    assert main(["--procedure", "xyz"]) != 0
    assert "usage" in capsys.readouterr().err


def test_cli_surfaces_infeasible_dual_association(tmp_path, capsys):
    code = main(["--scenario", "2", "--mts", "4", "--procedure", "dcp", "--association", "sm",
                 "--macros", "1", "--picos-per-macro", "0", "--slots", "10", "--reps", "1",
                 "--out", str(tmp_path / "o")])
    assert code != 0
    assert "at least 2 BSs" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_cli_sync_none(tmp_path):
    code = main(["--scenario", "4", "--mts", "6", "--procedure", "dcp", "--association", "uigo",
                 "--slots", "60", "--reps", "1", "--sync-period", "none", "--out", str(tmp_path)])
    assert code == 0
    assert read_csv(tmp_path / "summary.csv")[0]["sync_events"] == "0"


def test_failed_write_leaves_no_partial_files(tmp_path, monkeypatch):
    import hetnet_dc.engine as engine

    res = run_experiment(SMALL, write=False)

    def boom(result):
        yield ["x"] * len(PER_MT_COLUMNS)
        raise RuntimeError("disk full")

    monkeypatch.setattr(engine, "per_mt_rows", boom)
    with pytest.raises(RuntimeError):
        engine.write_outputs(res, tmp_path)
    assert list(tmp_path.iterdir()) == []
