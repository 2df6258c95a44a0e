"""Command-line pipeline: generate -> evaluate -> score -> report.

Exit codes: 0 ok, 2 bad flags, 3 environment or I/O problem, 4 data integrity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from argbench import __version__
from argbench.evaluation import load_records, run_evaluation
from argbench.gateway import ConfigError, ModelConfig
from argbench.graphs import Topology
from argbench.metrics import (
    BREAKDOWN_KEYS,
    CoverageError,
    NoDataError,
    breakdown,
    check_coverage,
    compute_metrics,
    select_hard_subset,
)
from argbench.puzzles import (
    SCHEMA_VERSION,
    DatasetSpec,
    OntologyError,
    default_ontology,
    generate_dataset,
    load_ontology,
    read_dataset,
    write_dataset,
)
from argbench.report import (
    METRICS_FILE,
    ReportError,
    breakdown_filename,
    build_report,
    write_breakdown_csv,
    write_metrics_csv,
)
from argbench.semantics import format_labelling, grounded_labelling

EXIT_FLAGS, EXIT_IO, EXIT_DATA = 2, 3, 4
RESULTS_FILE = "results.jsonl"
MANIFEST_FILE = "manifest.json"


class CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _atomic_write(path: Path, write) -> None:
    """Write via a temp file in the target directory so failures leave nothing behind."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        write(Path(tmp))
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _read_dataset(path: Path):
    if not path.exists():
        raise CliError(EXIT_IO, f"dataset {path} does not exist")
    try:
        dataset = read_dataset(path)
    except ValueError as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc
    if not dataset:
        raise CliError(EXIT_DATA, f"dataset {path} is empty")
    return dataset


def _results_path(path: Path) -> Path:
    return path / RESULTS_FILE if path.is_dir() else path


def _read_results(path: Path):
    path = _results_path(path)
    if not path.exists():
        raise CliError(EXIT_IO, f"results {path} do not exist")
    try:
        return load_records(path)
    except ValueError as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        spec = DatasetSpec(args.family, args.n_min, args.n_max, args.variations, args.seed, args.shuffled)
    except ValueError as exc:
        flag = "--n-min/--n-max" if "range" in str(exc) or "n_min" in str(exc) else "--variations/--seed"
        raise CliError(EXIT_FLAGS, f"{flag}: {exc}") from exc
    if bool(args.names) != bool(args.statements):
        raise CliError(EXIT_FLAGS, "--names and --statements must be given together")
    try:
        ontology = load_ontology(args.names, args.statements) if args.names else default_ontology()
    except OSError as exc:
        raise CliError(EXIT_IO, f"--names/--statements: {exc}") from exc
    except OntologyError as exc:
        raise CliError(EXIT_DATA, f"--names/--statements: {exc}") from exc
    try:
        dataset = generate_dataset(spec, ontology)
    except ValueError as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc
    _atomic_write(args.out, lambda p: write_dataset(dataset, p))
    yes = sum(inst.label for inst in dataset)
    print(f"wrote {len(dataset)} instances to {args.out}")
    print(f"yes fraction {100 * yes / len(dataset):.2f}% ({yes}/{len(dataset)})")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    dataset = _read_dataset(args.dataset)
    if not args.config.exists():
        raise CliError(EXIT_IO, f"--config: {args.config} does not exist")
    try:
        config = ModelConfig.load(args.config)
    except (ConfigError, TypeError, ValueError) as exc:
        raise CliError(EXIT_FLAGS, f"--config: {exc}") from exc
    if config.provider == "fixtures" and not Path(config.fixtures_path).exists():
        raise CliError(EXIT_IO, f"fixtures file {config.fixtures_path} does not exist")

    run_dir: Path = args.run
    results = run_dir / RESULTS_FILE
    manifest_path = run_dir / MANIFEST_FILE
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        previous = json.loads(manifest_path.read_text()) if manifest_path.exists() else {}
        manifest = {
            "tool_version": __version__,
            "dataset_schema_version": SCHEMA_VERSION,
            "dataset": str(args.dataset.resolve()),
            "model_config": str(args.config.resolve()),
            "provider": config.provider,
            "model": config.name,
            "run_path": str(run_dir.resolve()),
            "created": previous.get("created") or datetime.now(timezone.utc).isoformat(),
            "updated": datetime.now(timezone.utc).isoformat(),
        }
        _atomic_write(manifest_path, lambda p: p.write_text(json.dumps(manifest, indent=2) + "\n"))
        recorded = {r.instance_id for r in load_records(results)}
    except (OSError, ValueError) as exc:
        raise CliError(EXIT_IO, f"--run: cannot use {run_dir}: {exc}") from exc

    recorded &= {inst.id for inst in dataset}
    try:
        records = run_evaluation(dataset, config, results)
    except PermissionError as exc:
        raise CliError(EXIT_IO, str(exc)) from exc
    new = len(dataset) - len(recorded)
    parsed = sum(r.parsed for r in records)
    failed = sum(r.status != "ok" for r in records)
    print(f"{new} new requests")
    print(f"parsed {parsed} unparsed {len(records) - parsed - failed} failed {failed}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    dataset = _read_dataset(args.dataset)
    records = _read_results(args.results)
    try:
        check_coverage(records, dataset)
    except CoverageError as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc
    try:
        report = compute_metrics(records)
    except NoDataError as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc
    run = args.name or _results_path(args.results).parent.name or "run"
    nonlinear = any(inst.family == "nonlinear" for inst in dataset)
    outputs = []
    for key in args.breakdown:
        outputs.append((breakdown_filename(key), breakdown(records, dataset, key), False))
        if key == "n_args" and nonlinear:
            rows = breakdown(records, dataset, key, split_by_label=True)
            outputs.append((breakdown_filename(key, True), rows, True))

    out: Path = args.out
    _atomic_write(out / METRICS_FILE, lambda p: write_metrics_csv(report, p, run))
    for name, rows, split in outputs:
        _atomic_write(out / name, lambda p, rows=rows, split=split: write_breakdown_csv(rows, p, split))
    print(
        f"{run}: accuracy {report.accuracy:.2f} f1 {report.f1:.2f} mcc {report.mcc:.2f} "
        f"recall {report.recall:.2f} precision {report.precision:.2f} "
        f"(parsed {report.parsed}, unparsed {report.unparsed}, failed {report.failed})"
    )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    for d in args.runs:
        if not d.is_dir():
            raise CliError(EXIT_IO, f"--runs: {d} is not a directory")
    try:
        written = build_report(args.runs, args.out)
    except ReportError as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def cmd_hard_subset(args: argparse.Namespace) -> int:
    dataset = _read_dataset(args.dataset)
    a = _read_results(args.results_a)
    b = _read_results(args.results_b)
    try:
        check_coverage(a, dataset)
        check_coverage(b, dataset)
        hard = select_hard_subset(a, b)
    except CoverageError as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc
    subset = [inst for inst in dataset if inst.id in hard]
    _atomic_write(args.out, lambda p: write_dataset(subset, p))
    if not subset:
        print("warning: both runs answered every instance correctly; hard subset is empty",
              file=sys.stderr)
    print(f"hard subset size {len(subset)}")
    return 0


def cmd_label(args: argparse.Namespace) -> int:
    try:
        topology = Topology.parse(args.topology)
    except ValueError as exc:
        raise CliError(EXIT_FLAGS, f"--topology: {exc}") from exc
    print(format_labelling(grounded_labelling(topology.graph())))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="argbench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a puzzle dataset (JSON Lines)")
    p.add_argument("--family", choices=["linear", "nonlinear"], required=True)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--variations", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shuffled", action="store_true", help="shuffle fact-line order")
    p.add_argument("--names", type=Path, help="names file (default: shipped list)")
    p.add_argument("--statements", type=Path, help="statements file (default: shipped list)")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="query a model for every instance (resumable)")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--config", type=Path, required=True, help="model config (YAML or JSON)")
    p.add_argument("--run", type=Path, required=True, help="run directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("score", help="compute metrics and breakdown CSVs")
    p.add_argument("--results", type=Path, required=True, help="results.jsonl or run directory")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--breakdown", nargs="*", choices=BREAKDOWN_KEYS, default=list(BREAKDOWN_KEYS))
    p.add_argument("--name", help="run name used in the metrics CSV")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="charts and merged CSVs from scored runs")
    p.add_argument("--runs", type=Path, nargs="+", required=True, help="score output directories")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("hard-subset", help="restrict a dataset to instances either run got wrong")
    p.add_argument("--results-a", type=Path, required=True)
    p.add_argument("--results-b", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_hard_subset)

    p = sub.add_parser("label", help="print the grounded labelling of a topology")
    p.add_argument("--topology", required=True, help="e.g. linear:3 or star:1+2")
    p.set_defaults(func=cmd_label)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"argbench {args.command}: error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"argbench {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
