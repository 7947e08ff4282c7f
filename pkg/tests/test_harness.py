import csv
import json
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfoverlay.generators import Model
from sfoverlay.harness import (
    SpecError,
    derive_seed,
    emit_outputs,
    parse_spec,
    run_experiment,
)
from sfoverlay.search import Algorithm

SMOKE = "model=PA n_nodes=100 m=2 realizations=1 n_sources=1 algorithms=FL"


def read_tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestParse:
    def test_defaults(self):
        s = parse_spec("model=PA n_nodes=1000 m=2")
        assert s.model is Model.PA
        assert (s.n_nodes, s.m, s.cutoffs) == ([1000], [2], [None])
        assert (s.realizations, s.n_sources, s.bins_per_decade) == (10, 100, 10)
        assert s.ttl == list(range(1, 11))
        assert s.algorithms == []

    def test_cm_needs_gamma(self):
        with pytest.raises(SpecError) as exc:
            parse_spec("model=CM n_nodes=1000 m=1")
        assert exc.value.key == "gamma_target"
        assert "gamma_target" in str(exc.value)

    def test_cutoff_list(self):
        s = parse_spec("model=PA n_nodes=1000 m=1 cutoffs=10,40,none")
        assert s.cutoffs == [10, 40, None]
        assert [p.name for p in s.sweep_points()] == [
            "pa_n1000_m1_kc10", "pa_n1000_m1_kc40", "pa_n1000_m1_kcnone",
        ]

    @pytest.mark.parametrize("key", ["model", "n_nodes", "m"])
    def test_missing_required(self, key):
        parts = {"model": "model=PA", "n_nodes": "n_nodes=100", "m": "m=1"}
        text = " ".join(v for k, v in parts.items() if k != key)
        with pytest.raises(SpecError) as exc:
            parse_spec(text)
        assert exc.value.key == key

    @pytest.mark.parametrize(
        "text,key",
        [
            ("model=PA n_nodes=100 m=1 colour=blue", "colour"),
            ("model=PA n_nodes=ten m=1", "n_nodes"),
            ("model=PA n_nodes=100 m=2 cutoffs=2", "cutoffs"),
            ("model=PA n_nodes=100 m=1 realizations=0", "realizations"),
            ("model=PA n_nodes=100 m=1 algorithms=XX", "algorithms"),
            ("model=PA n_nodes=100 m=1 tau_sub=3", "tau_sub"),
            ("model=DAPA n_nodes=100 m=1", "tau_sub"),
            ("model=ZZ n_nodes=100 m=1", "model"),
            ("model=PA n_nodes=100 m=1 m=2", "m"),
            ("model=PA n_nodes=100 m=1 rw_mode=odd", "rw_mode"),
        ],
    )
    def test_errors_name_key(self, text, key):
        with pytest.raises(SpecError) as exc:
            parse_spec(text)
        assert exc.value.key == key

    def test_comments_and_newlines(self):
        text = "# sweep\nmodel=CM   # the model\nn_nodes=500,1000\nm=1\ngamma_target=2.2,3\nttl=1-3,6\n"
        s = parse_spec(text)
        assert s.gamma_target == [2.2, 3.0]
        assert s.ttl == [1, 2, 3, 6]
        assert len(s.sweep_points()) == 4
        assert s.text == text

    def test_dapa_substrate(self):
        s = parse_spec("model=DAPA n_nodes=1000 m=1 tau_sub=2,50 n_substrate=2000 mean_degree=10")
        assert s.substrate.radius == pytest.approx(np.sqrt(10 / (2000 * np.pi)))
        assert [p.name for p in s.sweep_points()] == ["dapa_n1000_m1_kcnone_tau2", "dapa_n1000_m1_kcnone_tau50"]
        s = parse_spec("model=DAPA n_nodes=100 m=1 tau_sub=3 substrate=mesh n_substrate=400")
        assert s.substrate.kind == "mesh"

    def test_algorithms(self):
        s = parse_spec("model=PA n_nodes=100 m=1 algorithms=fl,NF,rw")
        assert s.algorithms == [Algorithm.FL, Algorithm.NF, Algorithm.RW]


class TestSeeds:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**40), st.integers(0, 50), st.integers(0, 50))
    def test_pure(self, master, i, r):
        assert derive_seed(master, i, r) == derive_seed(master, i, r)

    def test_distinct(self):
        seeds = {derive_seed(7, i, r) for i in range(20) for r in range(20)}
        assert len(seeds) == 400


class TestRun:
    def test_smoke_fast_and_complete(self, tmp_path):
        spec = parse_spec(SMOKE)
        run_experiment(spec)  # warm compiled kernels
        t0 = time.perf_counter()
        res = run_experiment(spec)
        files = emit_outputs(res, tmp_path / "out")
        assert time.perf_counter() - t0 < 1.0
        assert len(files) == 4
        assert sorted(files) == sorted(
            f"pa_n100_m2_kcnone/{f}" for f in ("histogram.csv", "logbin.csv", "fit.json", "search_fl.csv")
        )
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_manifest_echoes_spec(self, tmp_path):
        text = "model=PA n_nodes=200 m=1\ncutoffs=10,40,none  # three settings\nrealizations=2 algorithms=NF ttl=1-3 n_sources=5\n"
        res = run_experiment(parse_spec(text))
        files = emit_outputs(res, tmp_path)
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["spec"] == text
        assert man["files"] == files
        subdirs = sorted(p.name for p in tmp_path.iterdir() if p.is_dir())
        assert subdirs == ["pa_n200_m1_kc10", "pa_n200_m1_kc40", "pa_n200_m1_kcnone"]

    def test_byte_identical_rerun(self, tmp_path):
        text = "model=CM n_nodes=400 m=1,2 gamma_target=2.5 cutoffs=20 realizations=3 algorithms=FL,NF,RW ttl=1-4 n_sources=8 master_seed=9"
        emit_outputs(run_experiment(parse_spec(text)), tmp_path / "a")
        emit_outputs(run_experiment(parse_spec(text), workers=2), tmp_path / "b")
        assert read_tree(tmp_path / "a") == read_tree(tmp_path / "b")

    def test_master_seed_matters(self):
        a = run_experiment(parse_spec("model=PA n_nodes=300 m=1 realizations=2 master_seed=1"))
        b = run_experiment(parse_spec("model=PA n_nodes=300 m=1 realizations=2 master_seed=2"))
        assert a.points[0].histogram.counts != b.points[0].histogram.counts

    def test_per_realization_mean(self, tmp_path):
        res = run_experiment(parse_spec("model=HAPA n_nodes=500 m=1 cutoffs=20,none realizations=4"))
        emit_outputs(res, tmp_path, per_realization=True)
        for p in res.points:
            fit = json.loads((tmp_path / p.point.name / "fit.json").read_text())
            with open(tmp_path / p.point.name / "realizations.csv") as fh:
                rows = list(csv.DictReader(fh))
            assert len(rows) == fit["realizations"] == 4
            assert fit["k_max_mean"] == pytest.approx(np.mean([int(r["k_max"]) for r in rows]), abs=0)
            assert fit["k_max_stderr"] >= 0
            assert fit["giant_component_fraction_stderr"] >= 0

    def test_cm_removals_reported(self, tmp_path):
        res = run_experiment(parse_spec("model=CM n_nodes=2000 m=1 gamma_target=2.2 realizations=2"))
        emit_outputs(res, tmp_path)
        fit = json.loads((tmp_path / res.points[0].point.name / "fit.json").read_text())
        assert fit["removed_self_loops_total"] + fit["removed_multi_edges_total"] > 0

    def test_failure_isolated(self, tmp_path):
        res = run_experiment(parse_spec("model=PA n_nodes=12 m=3 cutoffs=4,none realizations=2"))
        assert [p.ok for p in res.points] == [False, True]
        assert "stalled" in res.points[0].failure
        files = emit_outputs(res, tmp_path)
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert [e["status"] for e in man["sweep_points"]] == ["failed", "ok"]
        assert all(f.startswith("pa_n12_m3_kcnone/") for f in files)

    def test_search_csv_schema(self, tmp_path):
        res = run_experiment(parse_spec("model=PA n_nodes=300 m=2 realizations=2 algorithms=NF,RW ttl=1-5 n_sources=10"))
        emit_outputs(res, tmp_path)
        for alg in ("nf", "rw"):
            with open(tmp_path / "pa_n300_m2_kcnone" / f"search_{alg}.csv") as fh:
                rows = list(csv.DictReader(fh))
            assert [int(r["tau"]) for r in rows] == [1, 2, 3, 4, 5]
            hits = [float(r["mean_hits"]) for r in rows]
            assert hits == sorted(hits)
            assert all(float(r["stderr_hits"]) >= 0 for r in rows)


class TestEmitSafety:
    def test_refuses_overwrite(self, tmp_path):
        res = run_experiment(parse_spec(SMOKE))
        emit_outputs(res, tmp_path / "o")
        with pytest.raises(FileExistsError):
            emit_outputs(res, tmp_path / "o")
        emit_outputs(res, tmp_path / "o", overwrite=True)

    def test_unwritable(self, tmp_path):
        res = run_experiment(parse_spec(SMOKE))
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            emit_outputs(res, blocker)
        with pytest.raises(OSError):
            emit_outputs(res, blocker / "sub")
        assert blocker.read_text() == "x"


def test_fair_rw_walks_reported_nf_budget():
    res = run_experiment(parse_spec("model=PA n_nodes=1500 m=2 realizations=2 algorithms=NF,RW ttl=1-6 n_sources=20"))
    for r in res.points[0].realizations:
        assert np.array_equal(r.curves["NF"][1], r.curves["RW"][1])
