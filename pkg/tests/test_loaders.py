"""Tests for configuration loading, pole files and instance export."""

from pathlib import Path

import numpy as np
import pytest
import yaml
from pydantic import ValidationError

from qittls.errors import SerializationError
from qittls.loaders import (
    INSTANCE_FILE,
    MANIFEST_FILE,
    SOLUTION_FILE,
    export_instance,
    load_config,
    load_poles,
    save_model,
)
from qittls.models import AuditConfig, BenchConfig, Method, NoiseSpec, PronySpec
from qittls.problems import add_noise, gen_problem, standard_prony_spec
from qittls.sample_model import SampleMatrix
from qittls.tls_solvers import augment

EXAMPLES = Path(__file__).parent.parent / "yaml" / "examples"


def test_defaults_without_file():
    """No file and no overrides gives the model defaults."""
    assert load_config(BenchConfig) == BenchConfig()


def test_overrides_take_precedence(tmp_path):
    """File values replace defaults; explicit overrides replace file values; None is ignored."""
    path = tmp_path / "run.yaml"
    path.write_text("problem: heat\nm: 128\nrttls-sketch: 30\ntrials: 3\n", encoding="utf-8")
    config = load_config(BenchConfig, path, {"m": 64, "trials": None, "methods": "ttls,qittls"})
    assert config.problem == "heat"
    assert config.m == 64
    assert config.trials == 3
    assert config.rttls_sketch == 30
    assert config.methods == [Method.TTLS, Method.QITTLS]


def test_example_configs_validate():
    """The shipped example files are valid."""
    bench = load_config(BenchConfig, EXAMPLES / "bench_foxgood.yaml")
    assert (bench.problem, bench.m, bench.d) == ("foxgood", 256, 4)
    audit = load_config(AuditConfig, EXAMPLES / "bounds.yaml")
    assert audit.m == 8


def test_config_errors(tmp_path):
    """Missing files, non-mappings and unknown keys are reported."""
    with pytest.raises(FileNotFoundError, match="not found"):
        load_config(BenchConfig, tmp_path / "missing.yaml")

    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(SerializationError):
        load_config(BenchConfig, listing)

    broken = tmp_path / "broken.yaml"
    broken.write_text("m: [1, 2\n", encoding="utf-8")
    with pytest.raises(SerializationError):
        load_config(BenchConfig, broken)

    unknown = tmp_path / "unknown.yaml"
    unknown.write_text("colour: blue\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_config(BenchConfig, unknown)


def test_empty_file_gives_defaults(tmp_path):
    """An empty YAML file is an empty mapping."""
    path = tmp_path / "empty.yaml"
    path.write_text("", encoding="utf-8")
    assert load_config(AuditConfig, path) == AuditConfig()


def test_saved_config_loads_back(tmp_path):
    """A saved configuration passed back through load_config is unchanged."""
    config = BenchConfig(problem="baart", m=32, d=3, methods="QiTTLS", p=None, out=tmp_path / "r")
    path = tmp_path / "saved.yaml"
    save_model(config, path)
    assert yaml.safe_load(path.read_text(encoding="utf-8"))["methods"] == ["QiTTLS"]
    assert load_config(BenchConfig, path) == config


def test_example_pole_file_matches_standard_poles():
    """The shipped pole file lists the standard damped sinusoids."""
    poles, residues = load_poles(EXAMPLES / "prony_poles.yaml")
    loaded = PronySpec(poles=poles, residues=residues, m=60, n=60)
    standard = standard_prony_spec(60, 60)
    assert loaded.poles == standard.poles
    assert loaded.residues == standard.residues


def test_pole_file_variants(tmp_path):
    """A wrapping key, a default residue and complex residues are accepted."""
    path = tmp_path / "poles.yaml"
    path.write_text(
        "poles:\n"
        "  - {re: -0.5}\n"
        "  - {re: -0.1, im: 2.0, gamma: {re: 1.0, im: 0.5}}\n"
        "  - {re: -0.1, im: -2.0, gamma: {re: 1.0, im: -0.5}}\n",
        encoding="utf-8",
    )
    poles, residues = load_poles(path)
    assert poles == [(-0.5, 0.0), (-0.1, 2.0), (-0.1, -2.0)]
    assert residues == [(1.0, 0.0), (1.0, 0.5), (1.0, -0.5)]


def test_pole_file_errors(tmp_path):
    """Entries need a real part; the list must be nonempty."""
    with pytest.raises(FileNotFoundError):
        load_poles(tmp_path / "absent.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("- {im: 1.0}\n", encoding="utf-8")
    with pytest.raises(SerializationError, match="'re'"):
        load_poles(bad)
    empty = tmp_path / "empty.yaml"
    empty.write_text("poles: []\n", encoding="utf-8")
    with pytest.raises(SerializationError):
        load_poles(empty)
    residue = tmp_path / "residue.yaml"
    residue.write_text("- {re: -0.5, gamma: one}\n", encoding="utf-8")
    with pytest.raises(SerializationError, match="gamma"):
        load_poles(residue)


def test_export_instance(tmp_path):
    """The binary model holds the noisy [A, b]; the manifest describes it."""
    problem = gen_problem("gravity", 16)
    noise = NoiseSpec(eta=1e-2, seed=3)
    manifest_path = export_instance(problem, noise, tmp_path / "gravity")
    assert manifest_path.name == MANIFEST_FILE

    manifest = yaml.safe_load(manifest_path.read_text(encoding="utf-8"))
    assert manifest["problem"] == "gravity"
    assert (manifest["m"], manifest["n"]) == (16, 16)
    assert manifest["matrix"] == INSTANCE_FILE
    assert manifest["format"]["magic"] == "QSMX"
    assert manifest["x_true"] == SOLUTION_FILE

    model = SampleMatrix.load(manifest_path.parent / INSTANCE_FILE)
    expected = augment(*add_noise(problem, noise))
    np.testing.assert_array_equal(model.dense(), expected)
    assert manifest["frobenius_norm"] == pytest.approx(np.linalg.norm(expected))
    np.testing.assert_array_equal(np.load(manifest_path.parent / SOLUTION_FILE), problem.x_true)
