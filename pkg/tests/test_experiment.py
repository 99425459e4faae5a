import dataclasses
import json

import numpy as np
import pytest

from aiprobs.cli import main
from aiprobs.experiment import (
    ConfigError,
    RunConfig,
    combination_grid,
    evaluate_realization,
    run_experiment,
    run_matrix,
)
from aiprobs.graph import build_graph, load_interactions


@pytest.fixture
def dataset(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "toy.txt"
    lines = [f"user{u} item{i} 1" for u in range(40) for i in range(30) if rng.random() < 0.25 + 0.02 * (i % 5)]
    path.write_text("\n".join(lines) + "\n")
    return path


def config(dataset, **kw):
    base = dict(dataset=str(dataset), realizations=3)
    base.update(kw)
    return RunConfig(**base)


class TestRunExperiment:
    def test_reports_written(self, dataset, tmp_path):
        out = tmp_path / "out"
        rep = run_experiment(config(dataset, output_dir=str(out)))
        assert rep.count == 3 and rep.seeds == [0, 1, 2]
        assert {p.name for p in out.iterdir()} == {"per_realization.tsv", "aggregate.tsv", "report.txt", "manifest.json"}
        rows = (out / "per_realization.tsv").read_text().splitlines()
        assert len(rows) == 1 + 3 * 3
        assert all(0 <= v <= 1 for vals in rep.values.values() for v in vals)

    def test_byte_identical(self, dataset, tmp_path):
        for name in ("a", "b"):
            run_experiment(config(dataset, model="probs", output_dir=str(tmp_path / name)))
        for f in ("aggregate.tsv", "per_realization.tsv", "manifest.json", "report.txt"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_manifest_reruns_one_realization(self, dataset, tmp_path):
        rep = run_experiment(config(dataset, output_dir=str(tmp_path)))
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        cfg = dict(manifest["configs"][0])
        cfg["ratios"] = tuple(cfg["ratios"])
        restored = RunConfig(**cfg)
        graph = build_graph(load_interactions(manifest["dataset"]))
        seed = manifest["seeds"][1]
        again = evaluate_realization(graph, seed, [restored])[0]
        assert again == {k: rep.values[k][1] for k in again}

    def test_workers_agree(self, dataset):
        one = run_experiment(config(dataset, model="pure-dhc"))
        two = run_experiment(config(dataset, model="pure-dhc", workers=2))
        assert one.values == two.values

    @pytest.mark.parametrize("kw", [
        dict(proportioning="literal"),
        dict(proportioning="literal", normalization="none"),
        dict(model="heat"),
        dict(realizations=0),
        dict(ratios=(0.8, 0.1, 0.2)),
    ])
    def test_invalid_config_writes_nothing(self, dataset, tmp_path, kw):
        out = tmp_path / "out"
        with pytest.raises(ConfigError):
            run_experiment(config(dataset, output_dir=str(out), **kw))
        assert not out.exists()

    def test_literal_allowed_on_observed_scope(self, dataset):
        rep = run_experiment(config(dataset, proportioning="literal", normalization="none", scope="observed",
                                    realizations=1))
        assert rep.count == 1

    def test_unreadable_dataset(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            run_experiment(config(tmp_path / "missing.txt"))

    def test_truncation_flagged(self, dataset):
        cfg = config(dataset, representation="method-two", truncation=5, realizations=1)
        rep = run_experiment(cfg)
        assert rep.approximate and "approx" in rep.label

    def test_env_overrides(self, dataset, monkeypatch, tmp_path):
        monkeypatch.setenv("AIPROBS_SEED", "7")
        monkeypatch.setenv("AIPROBS_OUTPUT_DIR", str(tmp_path))
        cfg = RunConfig.from_env(dataset=str(dataset))
        assert cfg.base_seed == 7 and cfg.output_dir == str(tmp_path)


class TestMatrix:
    def test_singleton(self, dataset):
        table = run_matrix([config(dataset, model="probs")])
        assert len(table.reports) == 1
        assert table.render().count("*") == 3 + 1

    def test_grid(self, dataset):
        grid = combination_grid(config(dataset, realizations=1))
        assert len(grid) == 15 and len({c.label for c in grid}) == 15
        table = run_matrix(grid)
        assert set(table.best) == {"recall", "mrr", "ndcg"}

    def test_protocol_mismatch(self, dataset):
        with pytest.raises(ConfigError):
            run_matrix([config(dataset), config(dataset, n=5)])

    def test_rows_keep_realizations_shared(self, dataset):
        base = config(dataset)
        table = run_matrix([dataclasses.replace(base, model=m) for m in ("probs", "aiprobs")])
        solo = run_experiment(dataclasses.replace(base, model="probs"))
        assert table.row("ProbS").values == solo.values


class TestCli:
    def test_run(self, dataset, tmp_path, capsys):
        assert main(["run", str(dataset), "--realizations", "2", "--model", "probs",
                     "--output-dir", str(tmp_path)]) == 0
        assert "ProbS" in capsys.readouterr().out
        assert (tmp_path / "aggregate.tsv").exists()

    def test_env_seed(self, dataset, tmp_path, monkeypatch):
        monkeypatch.setenv("AIPROBS_SEED", "11")
        monkeypatch.setenv("AIPROBS_OUTPUT_DIR", str(tmp_path))
        assert main(["run", str(dataset), "--realizations", "1"]) == 0
        assert json.loads((tmp_path / "manifest.json").read_text())["seeds"] == [11]

    def test_failures_exit_nonzero(self, dataset, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.txt")]) != 0
        assert main(["run", str(dataset), "--proportioning", "literal"]) != 0
        err = capsys.readouterr().err
        assert "not readable" in err and "literal" in err

    def test_malformed_dataset(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("u1 i1\nu2\n")
        assert main(["run", str(bad)]) == 1
        assert "line 2" in capsys.readouterr().err

    def test_matrix_and_exports(self, dataset, tmp_path, capsys):
        assert main(["matrix", str(dataset), "--realizations", "1"]) == 0
        out = capsys.readouterr().out
        assert "ProbS" in out and "Pure-DHC" in out
        assert main(["split", str(dataset), str(tmp_path / "s"), "--seed", "2"]) == 0
        assert (tmp_path / "s" / "test.txt").exists()
        assert main(["represent", str(dataset), str(tmp_path / "r")]) == 0
        assert len((tmp_path / "r" / "users.tsv").read_text().splitlines()) == 40
