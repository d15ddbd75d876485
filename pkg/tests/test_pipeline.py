import json
import logging
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from zerog.adapter import LowRankAdapter
from zerog.aggregate import AggregationConfig
from zerog.cli import main as cli_main
from zerog.config import AblationFlags, ExperimentConfig, config_from_dict
from zerog.embeddings import EmbeddingTable, ProviderSpec
from zerog.errors import ConfigError
from zerog.pipeline import (
    argmax_predict,
    evaluate_dataset,
    predict_dataset,
    run_inference,
    run_pretrain,
)
from zerog.report import write_eval_reports
from zerog.sampler import SamplerConfig
from zerog.synth import SynthSpec, generate_synthetic

from conftest import make_graph, write_dataset_dir


def identity_adapter(dim):
    return LowRankAdapter.initialize(dim, rank=2, dropout_rate=0.0, seed=0)


def small_cfg(tmp_path, sources, targets, dim=8, **kw):
    cfg = ExperimentConfig(
        source_datasets=sources,
        target_datasets=targets,
        provider=ProviderSpec(kind="cache-file", dim=dim),
        output_dir=tmp_path / "out",
        seed=0,
    )
    cfg.sampler = SamplerConfig(k=kw.pop("k", 1))
    cfg.aggregation = AggregationConfig(iterations=kw.pop("iterations", 2))
    for key, value in kw.items():
        setattr(cfg, key, value)
    return cfg


# ------------------------------------------------------------- config checks


def test_validate_empty_sources(tmp_path):
    cfg = ExperimentConfig(
        source_datasets=[], target_datasets=[],
        provider=ProviderSpec(kind="mock", dim=4, seed=0),
    )
    with pytest.raises(ConfigError):
        cfg.validate()


def test_validate_missing_dir(tmp_path):
    cfg = ExperimentConfig(
        source_datasets=[tmp_path / "nope"], target_datasets=[],
        provider=ProviderSpec(kind="mock", dim=4, seed=0),
    )
    with pytest.raises(ConfigError):
        cfg.validate()


def test_validate_source_target_overlap(tmp_path):
    d = tmp_path / "same"
    d.mkdir()
    cfg = ExperimentConfig(
        source_datasets=[d], target_datasets=[d],
        provider=ProviderSpec(kind="mock", dim=4, seed=0),
    )
    with pytest.raises(ConfigError):
        cfg.validate()


def test_config_from_dict_defaults(tmp_path):
    cfg = config_from_dict({"source_datasets": ["a"]}, base_dir=tmp_path)
    assert cfg.adapter.rank == 4 and cfg.adapter.alpha == 16.0
    assert cfg.optimizer.lr == 1e-4 and cfg.optimizer.weight_decay == 0.01
    assert cfg.aggregation.iterations == 8
    assert cfg.epochs == 3
    assert cfg.source_datasets == [tmp_path / "a"]
    from fractions import Fraction

    assert cfg.sampler.filter_ratio == Fraction(1, 2)


def test_effective_applies_ablation_flags():
    cfg = ExperimentConfig(
        source_datasets=[Path("x")], target_datasets=[],
        provider=ProviderSpec(kind="mock", dim=4, seed=0),
        ablation=AblationFlags(no_prompt=True, no_aggregation=True,
                               no_normalization=True),
    )
    eff = cfg.effective()
    assert not eff.sampler.attach_prompts
    assert eff.aggregation.iterations == 0
    assert not eff.aggregation.normalize


# --------------------------------------------------------------- prediction


def test_argmax_predict_smallest_index_wins_ties():
    c = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert argmax_predict(np.array([1.0, 0.0]), c) == 0


def test_argmax_predict_empty_classes():
    with pytest.raises(ConfigError):
        argmax_predict(np.zeros(3), np.zeros((0, 3)))


def test_step0_matches_raw_embedding_argmax():
    # identity adapter + zero aggregation rounds + no prompt reduces to the
    # raw-similarity baseline, bit for bit
    rng = np.random.default_rng(0)
    g = make_graph(20, [(i, (i + 1) % 20) for i in range(20)],
                   labels=[i % 3 for i in range(20)], n_classes=3)
    table = EmbeddingTable(
        dim=6,
        node_vectors=rng.normal(size=(20, 6)).astype(np.float32),
        class_vectors=rng.normal(size=(3, 6)).astype(np.float32),
        prompt_vector=rng.normal(size=6).astype(np.float32),
    )
    preds = predict_dataset(g, table, identity_adapter(6),
                            AggregationConfig(iterations=0), use_prompt=False)
    baseline = np.argmax(
        table.node_vectors.astype(np.float64)
        @ table.class_vectors.astype(np.float64).T,
        axis=1,
    )
    np.testing.assert_array_equal(preds, baseline)


def test_evaluate_report_arithmetic():
    # planted predictions: nodes 0,1 -> class 0; nodes 2,3 -> class 1;
    # true labels 0,1,1,1 give a hand-checkable confusion matrix
    g = make_graph(4, [], labels=[0, 1, 1, 1], n_classes=2)
    node_vecs = np.array(
        [[1, 0], [1, 0], [0, 1], [0, 1]], dtype=np.float32
    )
    table = EmbeddingTable(
        dim=2,
        node_vectors=node_vecs,
        class_vectors=np.eye(2, dtype=np.float32),
        prompt_vector=np.zeros(2, dtype=np.float32),
    )
    rep = evaluate_dataset(g, table, identity_adapter(2),
                           AggregationConfig(iterations=0), use_prompt=False)
    np.testing.assert_array_equal(rep.confusion, [[1, 0], [1, 2]])
    assert rep.accuracy == 0.75
    assert rep.per_class_precision == [0.5, 1.0]
    assert rep.per_class_recall == [1.0, 2 / 3]
    assert rep.labeled_total == 4


def test_shared_class_names_warn(tmp_path, caplog):
    ga = make_graph(6, [(i, i + 1) for i in range(5)],
                    labels=[i % 2 for i in range(6)], name="a")
    gb = make_graph(6, [(i, i + 1) for i in range(5)],
                    labels=[i % 2 for i in range(6)], name="b")
    pa = write_dataset_dir(tmp_path, ga)
    pb = write_dataset_dir(tmp_path, gb)
    cfg = ExperimentConfig(
        source_datasets=[pa], target_datasets=[pb],
        provider=ProviderSpec(kind="mock", dim=8, seed=0),
        output_dir=tmp_path / "out",
    )
    with caplog.at_level(logging.WARNING, logger="zerog.pipeline"):
        run_inference(cfg, identity_adapter(8))
    assert any("shares class names" in r.message for r in caplog.records)


# ------------------------------------------------------------- determinism


def test_pretrain_and_report_byte_identical(tmp_path):
    spec = SynthSpec(datasets=3, classes_per_dataset=3, nodes=40, dim=8, seed=0)
    paths = generate_synthetic(spec, tmp_path / "data")
    cfg = small_cfg(tmp_path, paths[:2], paths[2:])

    def run():
        ckpt, _ = run_pretrain(cfg)
        blob = ckpt.read_bytes()
        reports = run_inference(cfg, identity_adapter(8))
        rp = write_eval_reports(reports, cfg.output_dir)
        return blob, rp.read_bytes()

    c1, r1 = run()
    c2, r2 = run()
    assert c1 == c2
    assert r1 == r2


def test_training_log_has_parameter_count(tmp_path):
    spec = SynthSpec(datasets=2, classes_per_dataset=3, nodes=40, dim=8, seed=1)
    paths = generate_synthetic(spec, tmp_path / "data")
    cfg = small_cfg(tmp_path, paths, [])
    run_pretrain(cfg)
    log = json.loads((cfg.output_dir / "training_log.json").read_text())
    assert log["trainable_parameters"] == 2 * 8 * 4
    assert log["steps"] == log["subgraphs"] * log["epochs"]


# ---------------------------------------------------------------------- CLI


def _cli_setup(tmp_path, nodes=40, dim=8):
    spec = {"datasets": 3, "classes_per_dataset": 3, "nodes": nodes,
            "dim": dim, "seed": 0}
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    runner = CliRunner()
    res = runner.invoke(cli_main, ["synth", "--spec", str(spec_path),
                                   "--out", str(tmp_path / "data")])
    assert res.exit_code == 0, res.output
    cfg = {
        "source_datasets": ["data/synth_000", "data/synth_001"],
        "target_datasets": ["data/synth_002"],
        "provider": {"kind": "cache-file", "dim": dim},
        "sampler": {"k": 1},
        "aggregation": {"iterations": 2},
        "epochs": 1,
        "output_dir": "out",
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    return runner, cfg_path


def test_cli_pretrain_infer_roundtrip(tmp_path):
    runner, cfg_path = _cli_setup(tmp_path)
    res = runner.invoke(cli_main, ["pretrain", "--config", str(cfg_path)])
    assert res.exit_code == 0, res.output
    assert "trainable parameters: 64" in res.output
    out = tmp_path / "out"
    assert (out / "adapter.zgadp").is_file()
    assert (out / "loss_curve.png").is_file()
    assert (out / "training_log.csv").is_file()

    res = runner.invoke(cli_main, [
        "infer", "--config", str(cfg_path),
        "--checkpoint", str(out / "adapter.zgadp"),
    ])
    assert res.exit_code == 0, res.output
    assert (out / "report.json").is_file()
    assert (out / "report.txt").is_file()
    assert (out / "confusion_synth_002.csv").is_file()
    assert (out / "confusion_synth_002.png").is_file()


def test_cli_ablate(tmp_path):
    runner, cfg_path = _cli_setup(tmp_path)
    res = runner.invoke(cli_main, ["ablate", "--config", str(cfg_path)])
    assert res.exit_code == 0, res.output
    out = tmp_path / "out"
    assert (out / "ablation.txt").is_file()
    assert (out / "ablation.csv").is_file()
    assert (out / "ablation.png").is_file()
    for variant in ("full", "no_prompt", "no_aggregation",
                    "no_normalization", "dense_adapter"):
        assert variant in res.output


def test_cli_sample_stats(tmp_path):
    runner, cfg_path = _cli_setup(tmp_path)
    res = runner.invoke(cli_main, ["sample-stats", "--config", str(cfg_path)])
    assert res.exit_code == 0, res.output
    assert "synth_000" in res.output


def test_cli_gradcheck(tmp_path):
    runner = CliRunner()
    res = runner.invoke(cli_main, ["gradcheck", "--instances", "3"])
    assert res.exit_code == 0, res.output
    assert "worst:" in res.output


def test_cli_config_error_exit_code(tmp_path):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({
        "source_datasets": ["missing_dir"],
        "target_datasets": [],
        "provider": {"kind": "mock", "dim": 8},
    }))
    runner = CliRunner()
    res = runner.invoke(cli_main, ["pretrain", "--config", str(cfg_path)])
    assert res.exit_code == 2
