"""YAML loaders for run configurations and pole files, plus instance export."""

from pathlib import Path
from typing import Any, TypeVar

import numpy as np
import yaml
from pydantic import BaseModel

from .errors import SerializationError
from .models import NoiseSpec, TestProblem
from .problems import add_noise
from .sample_model import FORMAT_VERSION, MAGIC, sm_build
from .tls_solvers import augment

ConfigT = TypeVar("ConfigT", bound=BaseModel)

INSTANCE_FILE = "instance.qsmx"
MANIFEST_FILE = "manifest.yaml"
SOLUTION_FILE = "x_true.npy"


def load_config(
    model: type[ConfigT],
    file_path: Path | str | None = None,
    overrides: dict[str, Any] | None = None,
) -> ConfigT:
    """Build a run configuration from an optional YAML file and explicit overrides.

    Keys may use dashes or underscores. Overrides whose value is None are
    ignored, so unset command-line flags keep the file (or default) value.

    Args:
        model: Pydantic model class to validate against.
        file_path: YAML mapping of option names to values.
        overrides: Values that take precedence over the file.

    Returns:
        Validated configuration instance.

    Raises:
        FileNotFoundError: If ``file_path`` is given but does not exist.
        SerializationError: If the file is not a YAML mapping.
    """
    data: dict[str, Any] = {}
    if file_path is not None:
        file_path = Path(file_path)
        if not file_path.exists():
            raise FileNotFoundError(f"Config file not found: {file_path}")
        content = _load_yaml_file(file_path) or {}
        if not isinstance(content, dict):
            raise SerializationError(f"{file_path} must contain a mapping of option names to values")
        data = {str(key).replace("-", "_"): value for key, value in content.items()}
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return model.model_validate(data)


def save_model(model: BaseModel, file_path: Path | str) -> None:
    """Save a configuration or summary model to YAML.

    Args:
        model: Pydantic model instance; a saved run configuration can be passed back with --config.
        file_path: Path where YAML should be saved.
    """
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)

    with open(file_path, "w", encoding="utf-8") as f:
        yaml.safe_dump(model.model_dump(mode="json"), f, default_flow_style=False, sort_keys=False)


def _complex_entry(value: Any, field: str, index: int) -> tuple[float, float]:
    if isinstance(value, dict):
        return float(value.get("re", 0.0)), float(value.get("im", 0.0))
    if isinstance(value, (int, float)):
        return float(value), 0.0
    raise SerializationError(f"entry {index}: {field} must be a number or a {{re, im}} mapping")


def load_poles(file_path: Path | str) -> tuple[list[tuple[float, float]], list[tuple[float, float]]]:
    """Load poles and residues from a YAML list of ``{re, im, gamma}`` entries.

    ``gamma`` defaults to 1 and may itself be a ``{re, im}`` mapping. A
    top-level ``poles:`` key around the list is accepted.

    Returns:
        (poles, residues) as (real, imaginary) pairs.
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"Pole file not found: {file_path}")
    content = _load_yaml_file(file_path)
    if isinstance(content, dict):
        content = content.get("poles")
    if not isinstance(content, list) or not content:
        raise SerializationError(f"{file_path} must contain a nonempty list of poles")

    poles: list[tuple[float, float]] = []
    residues: list[tuple[float, float]] = []
    for index, entry in enumerate(content):
        if not isinstance(entry, dict) or "re" not in entry:
            raise SerializationError(f"entry {index}: expected a mapping with at least 're'")
        poles.append((float(entry["re"]), float(entry.get("im", 0.0))))
        residues.append(_complex_entry(entry.get("gamma", 1.0), "gamma", index))
    return poles, residues


def export_instance(
    problem: TestProblem,
    noise: NoiseSpec,
    directory: Path | str,
    rng: np.random.Generator | None = None,
) -> Path:
    """Write a noisy instance as a binary sample model of C = [A, b] plus a YAML manifest.

    Args:
        problem: Exact test problem.
        noise: Noise level and seed.
        directory: Output folder, created if needed.
        rng: Noise stream; defaults to one seeded from ``noise.seed``.

    Returns:
        Path of the manifest.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    A, b = add_noise(problem, noise, rng=rng)
    model = sm_build(augment(A, b))
    model.save(directory / INSTANCE_FILE)

    m, n1 = model.shape
    manifest: dict[str, Any] = {
        "problem": problem.name,
        "m": m,
        "n": n1 - 1,
        "eta": noise.eta,
        "seed": noise.seed,
        "matrix": INSTANCE_FILE,
        "format": {"magic": MAGIC.decode("ascii"), "version": FORMAT_VERSION, "layout": "C = [A, b]"},
        "frobenius_norm": float(np.sqrt(model.frob2())),
    }
    if problem.consistency_tol is not None:
        manifest["consistency_tol"] = problem.consistency_tol
    if problem.x_true is not None:
        np.save(directory / SOLUTION_FILE, problem.x_true)
        manifest["x_true"] = SOLUTION_FILE

    manifest_path = directory / MANIFEST_FILE
    with open(manifest_path, "w", encoding="utf-8") as f:
        yaml.safe_dump(manifest, f, default_flow_style=False, sort_keys=False)
    return manifest_path


def _load_yaml_file(file_path: Path) -> dict[str, Any] | list[Any] | None:
    """Load a single YAML file.

    Args:
        file_path: Path to YAML file.

    Returns:
        Parsed YAML content or None if file doesn't exist.
    """
    if not file_path.exists():
        return None

    with open(file_path, encoding="utf-8") as f:
        try:
            return yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise SerializationError(f"cannot parse {file_path}: {e}") from e
