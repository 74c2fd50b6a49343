"""CSV records, plot-data files and LaTeX result tables."""

import csv
import logging
from pathlib import Path

import numpy as np

from .models import BenchRun, BoundReport, Method, ResultSummary, TrialRecord
from .templates import load_results_table_template

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["problem", "m", "d", "method", "trial", "seed", "eta", "error", "reference", "status"]
TIME_COLUMN = "time"
BOUND_COLUMNS = [
    "trial",
    "epsilon_v",
    "gap_eta",
    "tau_d",
    "rhs",
    "observed",
    "gap_ok",
    "tau_ok",
    "b_ok",
    "x_nonzero",
    "hypothesis_ok",
    "holds",
]


def _sci(value: float) -> str:
    # 6 significant digits
    return f"{value:.5e}"


def emit_csv(records: list[TrialRecord], path: Path | str, include_time: bool = False) -> Path:
    """Write one header row and one line per record.

    Floats use scientific notation with 6 significant digits; a failed solve
    leaves the error cell empty. Wall time is only written when requested so
    the default output is byte-stable across runs.

    Args:
        records: Records in the order they should appear.
        path: Output CSV path; parent folders are created.
        include_time: Append the wall-time column.

    Returns:
        The written path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = CSV_COLUMNS + ([TIME_COLUMN] if include_time else [])
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for r in records:
            row = [
                r.problem,
                str(r.m),
                str(r.d),
                r.method.value,
                str(r.trial),
                str(r.seed),
                _sci(r.eta),
                "" if r.error is None else _sci(r.error),
                r.reference,
                r.status,
            ]
            if include_time:
                row.append(_sci(r.wall_time))
            writer.writerow(row)
    return path


def read_csv(path: Path | str) -> list[TrialRecord]:
    """Parse a file written by :func:`emit_csv` back into records."""
    with open(Path(path), encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path} is missing columns: {', '.join(sorted(missing))}")
        return [
            TrialRecord(
                problem=row["problem"],
                m=int(row["m"]),
                d=int(row["d"]),
                method=Method(row["method"]),
                trial=int(row["trial"]),
                seed=int(row["seed"]),
                eta=float(row["eta"]),
                error=float(row["error"]) if row["error"] else None,
                reference=row["reference"],
                status=row["status"],
                wall_time=float(row[TIME_COLUMN]) if row.get(TIME_COLUMN) else 0.0,
            )
            for row in reader
        ]


def emit_decay(sigma: np.ndarray, path: Path | str) -> Path:
    """Write (index, sigma_i) rows, one per singular value."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    index = np.arange(1, sigma.shape[0] + 1)
    np.savetxt(path, np.column_stack([index, sigma]), fmt=["%d", "%.16e"], header="index sigma")
    return path


def emit_bound_reports(reports: list[BoundReport], path: Path | str) -> Path:
    """One CSV line per audit trial with the bound, the observation and every hypothesis flag."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def cell(value: float | bool | None) -> str:
        if value is None:
            return ""
        if isinstance(value, bool):
            return str(value).lower()
        return _sci(value)

    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(BOUND_COLUMNS)
        for r in reports:
            holds = None if r.observed is None else r.observed <= r.rhs
            writer.writerow(
                [
                    "" if r.trial is None else str(r.trial),
                    cell(r.epsilon_v),
                    cell(r.gap_eta),
                    cell(r.tau_d),
                    cell(r.rhs),
                    cell(r.observed),
                    cell(r.gap_ok),
                    cell(r.tau_ok),
                    cell(r.b_ok),
                    cell(r.x_nonzero),
                    cell(r.hypothesis_ok),
                    cell(holds),
                ]
            )
    return path


def emit_plot_data(run: BenchRun, directory: Path | str) -> list[Path]:
    """Write whitespace-separated column files for the decay and solution plots.

    ``<problem>_m<m>_decay.dat`` holds (index, sigma_i) for all n+1 singular
    values of [A, b]. ``<problem>_m<m>_solutions.dat`` holds the index, the
    reference solution and one column per method from the first trial; a
    method that failed there is written as nan.

    Returns:
        Paths of the written files.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = f"{run.config.problem}_m{run.config.m}"
    written: list[Path] = []

    written.append(emit_decay(run.decay, directory / f"{stem}_decay.dat"))

    if run.reference is not None:
        n = run.reference.shape[0]
        columns = [np.arange(1, n + 1), run.reference]
        names = ["index", run.reference_label]
        for method in run.config.methods:
            columns.append(run.solutions.get(method.value, np.full(n, np.nan)))
            names.append(f"x_{method.value}")
        solutions_path = directory / f"{stem}_solutions.dat"
        fmt = ["%d"] + ["%.16e"] * (len(columns) - 1)
        np.savetxt(solutions_path, np.column_stack(columns), fmt=fmt, header=" ".join(names))
        written.append(solutions_path)

    logger.info("plot data written to %s", directory)
    return written


def summarize(records: list[TrialRecord]) -> list[ResultSummary]:
    """Median error and time per (problem, m, d, method), in first-seen order."""
    groups: dict[tuple[str, int, int, Method], list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.problem, r.m, r.d, r.method), []).append(r)

    summaries = []
    for (problem, m, d, method), members in groups.items():
        errors = [r.error for r in members if r.error is not None]
        summaries.append(
            ResultSummary(
                problem=problem,
                m=m,
                d=d,
                method=method,
                trials=len(members),
                failures=len(members) - len(errors),
                median_error=float(np.median(errors)) if errors else None,
                median_time=float(np.median([r.wall_time for r in members])),
            )
        )
    return summaries


def render_results_table(records: list[TrialRecord], include_time: bool = False) -> str:
    """Render the per-group medians as a LaTeX tabular.

    Args:
        records: Benchmark records.
        include_time: Add a median solve-time column.

    Returns:
        LaTeX source of the table.
    """
    template = load_results_table_template()
    return template.render(rows=summarize(records), include_time=include_time)
