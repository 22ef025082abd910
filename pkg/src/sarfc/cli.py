"""``sarfc`` command line: run, bench, fetch and check.

Exit codes: 0 success, 1 failed property check or every benchmark row
failed, 2 dataset could not be resolved, 3 pipeline failure (the failing
stage is printed).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import checks
from .core import Dataset, SarfcError
from .data_io import (
    BENCHMARK_MANIFESTS,
    GENERATORS,
    DatasetUnavailableError,
    find_manifest,
    generate_synthetic,
    load_manifest,
    load_manifests,
    resolve,
)
from .data_io import fetch as fetch_files
from .fission import CUT_RULES
from .metrics import MetricsReport
from .noise import smooth_density
from .pipeline import PipelineError, PipelineReport, sarfc

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_RESOLVE = 2
EXIT_PIPELINE = 3

BENCH_FIELDS = MetricsReport.FIELDS + ("note",)


def _g(x) -> str:
    """Six significant digits, as used for all diagnostics files."""
    return f"{x:.6g}"


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _result_row(dataset: Dataset, report: PipelineReport) -> list:
    if dataset.labels is None:
        return [dataset.name, "", str(report.k), "", "", "", ""]
    return MetricsReport.compute(dataset.name, report.labels, dataset.labels).as_row()


def _aligned(header, rows) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)] if rows else [len(h) for h in header]
    lines = ["  ".join(str(v).rjust(w) if i else str(v).ljust(w) for i, (v, w) in enumerate(zip(r, widths)))
             for r in [list(header)] + [list(r) for r in rows]]
    return "\n".join(line.rstrip() for line in lines)


def _write_diagnostics(out: Path, report: PipelineReport) -> None:
    prof = report.density
    if prof is not None:
        v = smooth_density(prof)
        rows = [[i + 1, _g(rho), _g(v.v[i + 1 - v.offset]) if i + 1 >= v.offset else ""]
                for i, rho in enumerate(prof.rho_sorted)]
        _write_rows(out / "density.csv", ["index", "rho_sorted", "v"], rows)
    if report.diagnostics is not None:
        report.diagnostics.to_csv(out / "curves.csv")


def _load_for_run(args) -> Dataset:
    if args.generate:
        params = {}
        for item in args.param or []:
            key, _, val = item.partition("=")
            params[key] = float(val)
        return generate_synthetic(args.generate, n=args.n, k=args.k, seed=args.seed, **params)
    return resolve(args.dataset, label_column=args.label_col)


def cmd_run(args) -> int:
    try:
        dataset = _load_for_run(args)
    except (SarfcError, ValueError, OSError) as exc:
        print(f"error: cannot resolve dataset: {exc}", file=sys.stderr)
        return EXIT_RESOLVE
    try:
        report = sarfc(dataset, r=args.r, noise_id=not args.no_noise_id, trace=args.trace, cut=args.cut, mode=args.mode)
    except PipelineError as exc:
        print(f"error: pipeline failed in stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        return EXIT_PIPELINE

    row = _result_row(dataset, report)
    print(f"dataset: {dataset.name} (n={dataset.n}, d={dataset.d})")
    print(f"k = {report.k}  (dense {report.dense_count}, border {report.border_count}, "
          f"r = {report.params.r}, d0 = {_g(report.params.d0_r)})")
    if report.diagnostics is not None:
        print(f"p_r = {report.diagnostics.p_r}, p_max = {report.diagnostics.p_max}")
    if dataset.labels is not None:
        print("Acc {3}  F1 {4}  ARI {5}  NMI {6}  (k_true = {1})".format(*row))
    for note in report.notes:
        print(f"note: {note}")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_rows(out / "result.csv", MetricsReport.FIELDS, [row])
        _write_rows(out / "labels.csv", ["point", "label", "dense"],
                    [[i, int(lab), int(m)] for i, (lab, m) in
                     enumerate(zip(report.labels, report.assignment.dense_mask))])
        if args.diagnostics:
            _write_diagnostics(out, report)
        if args.trace:
            with open(out / "fission_trace.jsonl", "w", encoding="utf-8") as fh:
                for step in report.fission_trace:
                    fh.write(json.dumps(step, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.manifest:
        try:
            manifests = load_manifests(args.manifest)
        except (SarfcError, ValueError, OSError) as exc:
            print(f"error: cannot read manifest: {exc}", file=sys.stderr)
            return EXIT_RESOLVE
    else:
        manifests = list(BENCHMARK_MANIFESTS)
    if args.datasets:
        picked = []
        for name in args.datasets:
            m = find_manifest(name, manifests)
            if m is None:
                print(f"error: unknown dataset {name!r}", file=sys.stderr)
                return EXIT_RESOLVE
            picked.append(m)
        manifests = picked

    rows = []
    failures = 0
    for m in manifests:
        k_true = "" if m.expected_k is None else str(m.expected_k)
        try:
            ds = load_manifest(m, args.data_dir, seed=args.seed)
            report = sarfc(ds, cut=args.cut)
            rows.append(_result_row(ds, report) + [""])
        except (SarfcError, ValueError, OSError) as exc:
            failures += 1
            stage = f"{exc.stage}: " if isinstance(exc, PipelineError) else ""
            rows.append([m.name, k_true, "ERROR", "", "", "", "", f"{stage}{type(exc).__name__}"])
            msg = str(exc)
            print(msg if msg.startswith(f"{m.name}:") else f"{m.name}: {msg}", file=sys.stderr)

    print(_aligned(BENCH_FIELDS, rows))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_rows(out / "bench.csv", BENCH_FIELDS, rows)
        (out / "bench.txt").write_text(_aligned(BENCH_FIELDS, rows) + "\n", encoding="utf-8")
    return EXIT_FAILED if rows and failures == len(rows) else EXIT_OK


def cmd_fetch(args) -> int:
    names = args.datasets or [m.name for m in BENCHMARK_MANIFESTS]
    status = EXIT_OK
    for name in names:
        m = find_manifest(name)
        if m is None:
            print(f"{name}: unknown dataset", file=sys.stderr)
            status = EXIT_RESOLVE
            continue
        try:
            paths = fetch_files(m, args.data_dir, timeout=args.timeout, force=args.force)
        except DatasetUnavailableError as exc:
            print(f"{name}: {exc}", file=sys.stderr)
            status = EXIT_RESOLVE
            continue
        print(f"{name}: " + (", ".join(str(p) for p in paths) if paths else "nothing to download"))
    return status


def cmd_check(args) -> int:
    ok = True
    res = checks.chain_suite(args.trials, seed=args.seed)
    passed = res.violations == 0
    ok &= passed
    print(f"{'PASS' if passed else 'FAIL'}  chains: {res.trials} trials, {res.violations} violations, "
          f"max MC/d0 = {res.worst_ratio:.12f}")
    for name, passed, got, want in checks.fc_fixture_results():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  r=1 fixture {name}" + ("" if passed else f": got {got}, want {want}"))
    for desc, passed, k in checks.straggler_results():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {desc}" + ("" if passed else f" (got {k})"))
    return EXIT_OK if ok else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sarfc", description="Parameter-free density-based fission clustering.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="cluster one dataset")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", help="benchmark name or path to a data file")
    src.add_argument("--generate", choices=GENERATORS, help="synthetic generator")
    run.add_argument("--n", type=int, help="generator point count")
    run.add_argument("--k", type=int, help="generator cluster count (blobs)")
    run.add_argument("--seed", type=int, default=0, help="generator seed")
    run.add_argument("--param", action="append", metavar="KEY=VALUE", help="extra generator parameter")
    run.add_argument("--label-col", type=int, help="label column of a data file (negative counts from the end)")
    run.add_argument("--out", help="directory for result, label and diagnostics files")
    run.add_argument("--diagnostics", action="store_true", help="write density and split curves")
    run.add_argument("--trace", action="store_true", help="write the fission trace as JSON lines")
    run.add_argument("--r", type=int, help="override the robustness order")
    run.add_argument("--no-noise-id", action="store_true", help="run fission on every point")
    run.add_argument("--cut", choices=CUT_RULES, default="crack", help="where subsets are cut")
    run.add_argument("--mode", choices=("auto", "full", "streamed"), default="auto", help="distance storage")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="run every dataset of a manifest")
    bench.add_argument("--manifest", help="manifest file (default: the built-in ten datasets)")
    bench.add_argument("datasets", nargs="*", help="restrict to these manifest names")
    bench.add_argument("--data-dir", help="dataset cache directory")
    bench.add_argument("--out", help="directory for bench.csv and bench.txt")
    bench.add_argument("--seed", type=int, default=0, help="seed for generated datasets")
    bench.add_argument("--cut", choices=CUT_RULES, default="crack")
    bench.set_defaults(func=cmd_bench)

    fetch = sub.add_parser("fetch", help="download benchmark files into the cache directory")
    fetch.add_argument("datasets", nargs="*")
    fetch.add_argument("--data-dir")
    fetch.add_argument("--timeout", type=float, default=30.0)
    fetch.add_argument("--force", action="store_true")
    fetch.set_defaults(func=cmd_fetch)

    check = sub.add_parser("check", help="run the built-in property checks")
    check.add_argument("--trials", type=int, default=1000)
    check.add_argument("--seed", type=int, default=0)
    check.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "r", None) is not None and args.r < 1:
        parser.error("--r must be at least 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
