"""Command-line surface: dataset synthesis, fitting, evaluation, plot data.

Every command reads flags first, then an optional JSON config file, then
built-in defaults.  Outputs are written atomically; stdout carries a
single-line JSON summary per command.  Exit codes: 0 success, 2 input
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from ._fileio import atomic_write_text
from .baselines import fit_flda_pairwise, fit_lda_eig
from .dataset import (
    DatasetError,
    GaussianSpec,
    corrupt_salt_pepper,
    load_csv,
    save_dataset,
    syn1_spec,
    syn2_spec,
    synthesize,
)
from .evaluation import (
    cross_validate,
    export_projection_plot,
    mean_min_pairwise_distance,
)
from .scatter import (
    EpsilonPolicy,
    between_scatter_pairwise,
    between_scatter_total_mean,
    class_statistics,
    within_scatter,
)
from .solver import SolverConfig, fit, model_snapshot, load_model, write_trace_csv

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

_METHOD_ALIASES = {"swrlda": "swrlda", "lda": "lda_eig", "lda_eig": "lda_eig", "flda": "flda"}
_PRESETS = {"syn1": syn1_spec, "syn2": syn2_spec}


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _label_selector(text: str):
    stripped = text.strip()
    if stripped.lstrip("-").isdigit():
        return int(stripped)
    return stripped


def _parse_int_range(text: str) -> list[int]:
    """Parse '1..4' into [1, 2, 3, 4] or a single integer into [k]."""
    if ".." in text:
        lo_text, hi_text = text.split("..", 1)
        lo, hi = int(lo_text), int(hi_text)
        if hi < lo:
            raise ValueError(f"empty range {text!r}")
        return list(range(lo, hi + 1))
    return [int(text)]


def _parse_corrupt_spec(text: str) -> dict:
    """Parse 'classes=0..3,frac=0.2+0.4,pixel=0.3,seeds=5' into a sweep spec."""
    spec = {"classes": [0, 1], "fracs": [0.2], "pixel": 0.3, "seeds": 1}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"corrupt spec segment {part!r} is not key=value")
        key, value = part.split("=", 1)
        key = key.strip()
        if key == "classes":
            spec["classes"] = _parse_int_range(value)
        elif key == "frac":
            spec["fracs"] = [float(v) for v in value.split("+")]
        elif key == "pixel":
            spec["pixel"] = float(value)
        elif key == "seeds":
            spec["seeds"] = int(value)
        else:
            raise ValueError(f"unknown corrupt spec key {key!r}")
    return spec


def _load_config(path) -> dict:
    if path is None:
        return {}
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(payload, dict):
        raise ValueError("config file must hold a JSON object")
    return payload


def _resolve(args, config: dict, name: str, default):
    """Flag > config-file entry > default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _method_key(name: str) -> str:
    try:
        return _METHOD_ALIASES[name.strip()]
    except KeyError:
        raise ValueError(
            f"unknown method {name!r}; expected swrlda, lda, or flda"
        ) from None


def _epsilon_policy(args, config) -> EpsilonPolicy:
    kind = _resolve(args, config, "epsilon_kind", "relative")
    value = _resolve(args, config, "epsilon", 1e-6)
    return EpsilonPolicy(kind=kind, value=float(value))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _print_summary(payload: dict):
    print(json.dumps(payload, separators=(",", ":"), sort_keys=True))


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> dict:
    config = _load_config(args.config)
    preset = _resolve(args, config, "preset", None)
    spec_path = _resolve(args, config, "spec", None)
    seed = _resolve(args, config, "seed", None)
    samples = _resolve(args, config, "samples", None)
    output = _resolve(args, config, "output", None)
    if output is None:
        raise ValueError("synth requires -o/--output")

    if preset is not None:
        if preset not in _PRESETS:
            raise ValueError(f"unknown preset {preset!r}; expected syn1 or syn2")
        spec = _PRESETS[preset](
            seed=0 if seed is None else seed,
            samples_per_class=200 if samples is None else samples,
        )
        provenance = f"preset:{preset}"
    elif spec_path is not None:
        payload = json.loads(Path(spec_path).read_text(encoding="utf-8"))
        spec = GaussianSpec.from_dict(payload)
        if seed is not None or samples is not None:
            spec = GaussianSpec(
                means=spec.means,
                covariance=spec.covariance,
                samples_per_class=spec.samples_per_class if samples is None else samples,
                seed=spec.seed if seed is None else seed,
            )
        provenance = f"spec:{spec_path}"
    else:
        raise ValueError("synth requires --preset or --spec")

    data = synthesize(spec)
    csv_path, sidecar = save_dataset(data, output, seed=spec.seed, provenance=provenance)
    return {
        "command": "synth",
        "output": str(csv_path),
        "sidecar": str(sidecar),
        "n": data.sample_count,
        "d": data.feature_count,
        "c": data.class_count,
        "seed": spec.seed,
    }


# ---------------------------------------------------------------------------
# fit


def _baseline_objective(data, W) -> float:
    # Squared criterion value at the solution; equals the sum of the kept
    # generalized eigenvalues.
    stats = class_statistics(data)
    between = between_scatter_total_mean(stats)
    return float(np.trace(W.T @ between @ W))


def cmd_fit(args) -> dict:
    config = _load_config(args.config)
    data = load_csv(
        _resolve(args, config, "input", None) or _missing("fit", "-i/--input"),
        _label_selector(str(_resolve(args, config, "label_column", "label"))),
    )
    method = _method_key(_resolve(args, config, "method", "swrlda"))
    m = int(_resolve(args, config, "m", 1))
    if m < 1:
        raise ValueError("projection dimension must be >= 1")
    seed = int(_resolve(args, config, "seed", 0))
    output = Path(_resolve(args, config, "output", "model.json"))
    trace_path = _resolve(args, config, "trace", None)
    if trace_path is None:
        trace_path = output.with_name(output.stem + "_trace.csv")
    policy = _epsilon_policy(args, config)

    start = time.perf_counter()
    if method == "swrlda":
        solver_config = SolverConfig(
            target_dim=m,
            tolerance=float(_resolve(args, config, "tol", 1e-6)),
            max_iterations=int(_resolve(args, config, "max_iter", 100)),
            seed=seed,
            epsilon_policy=policy,
            m_assembly=_resolve(args, config, "assembly", "fast"),
        )
        projection, trace = fit(data, solver_config)
        objectives = trace.objectives
        iterations = trace.iterations
        converged = trace.converged
        config_dict = solver_config.to_dict()
    else:
        fitter = fit_lda_eig if method == "lda_eig" else fit_flda_pairwise
        projection = fitter(data, m, policy)
        objectives = [_baseline_objective(data, projection.matrix)]
        iterations = 0
        converged = True
        config_dict = {
            "target_dim": m,
            "epsilon_policy": {"kind": policy.kind, "value": policy.value},
        }
    wall_time = time.perf_counter() - start

    stats = class_statistics(data)
    epsilon = policy.epsilon_for(within_scatter(data, stats))
    snapshot = model_snapshot(projection, epsilon, config_dict, objectives)
    atomic_write_text(output, json.dumps(snapshot, indent=2) + "\n")

    trace_rows = [(t, repr(float(v))) for t, v in enumerate(objectives)]
    atomic_write_text(trace_path, _csv_text(["iteration", "objective"], trace_rows))

    summary = {
        "command": "fit",
        "model": str(output),
        "trace": str(trace_path),
        "method": projection.source,
        "objective": objectives[-1],
        "iterations": iterations,
        "converged": converged,
        "constraint_residual": projection.constraint_residual,
    }
    if not args.no_timing:
        summary["wall_time_s"] = wall_time
    return summary


def _missing(command: str, flag: str):
    raise ValueError(f"{command} requires {flag}")


# ---------------------------------------------------------------------------
# eval


def _run_corruption_sweep(data, methods, m, folds, seed, spec, policy):
    rows = []
    for frac in spec["fracs"]:
        for method in methods:
            baseline = None
            for q in spec["classes"]:
                accs = []
                for rep in range(spec["seeds"]):
                    corrupted = (
                        data
                        if q == 0
                        else corrupt_salt_pepper(
                            data, range(q), frac, spec["pixel"], seed=seed + rep
                        )
                    )
                    report = cross_validate(
                        corrupted, method, m, k_folds=folds, seed=seed + rep,
                        epsilon_policy=policy,
                    )
                    accs.append(report.mean_accuracy)
                mean_acc = float(np.mean(accs))
                if q == 0:
                    baseline = mean_acc
                rows.append(
                    {
                        "sample_fraction": frac,
                        "classes_corrupted": q,
                        "method": method,
                        "mean_accuracy": mean_acc,
                        "accuracy_drop": (
                            None if baseline is None else float(baseline - mean_acc)
                        ),
                    }
                )
    return rows


def cmd_eval(args) -> dict:
    config = _load_config(args.config)
    input_path = _resolve(args, config, "input", None) or _missing("eval", "-i/--input")
    data = load_csv(
        input_path,
        _label_selector(str(_resolve(args, config, "label_column", "label"))),
    )
    methods = [
        _method_key(name)
        for name in str(_resolve(args, config, "methods", "swrlda")).split(",")
    ]
    dims_text = _resolve(args, config, "dims", None)
    if dims_text is not None:
        dims = _parse_int_range(str(dims_text))
    else:
        # default to the classical c-1 target, capped by the feature count
        default_m = min(data.class_count - 1, data.feature_count)
        dims = [int(_resolve(args, config, "m", default_m))]
    if any(m < 1 for m in dims):
        raise ValueError("projection dimensions must be >= 1")
    folds = int(_resolve(args, config, "folds", 5))
    seed = int(_resolve(args, config, "seed", 0))
    output = Path(_resolve(args, config, "output", "report.json"))
    policy = _epsilon_policy(args, config)
    include_timing = not args.no_timing

    reports = []
    for method in methods:
        for m in dims:
            report = cross_validate(
                data, method, m, k_folds=folds, seed=seed, epsilon_policy=policy
            )
            reports.append(report.as_dict(include_timing=include_timing))

    combined = {"dataset": str(input_path), "k_folds": folds, "seed": seed,
                "reports": reports}
    written = [str(output)]

    if dims_text is not None:
        table_path = output.with_name(output.stem + "_dims.csv")
        rows = [
            (r["method"], r["m"], repr(r["mean"]), repr(r["std"]),
             repr(r["min_pairwise_distance"]))
            for r in reports
        ]
        atomic_write_text(
            table_path,
            _csv_text(["method", "m", "mean", "std", "min_pairwise_distance"], rows),
        )
        written.append(str(table_path))
        if not args.no_figures:
            from . import figures

            series = {}
            for r in reports:
                series.setdefault(r["method"], []).append((r["m"], r["mean"]))
            fig_path = figures.render_line_sweep(
                series, "projected dimension", "mean accuracy",
                output.with_name(output.stem + "_dims.png"),
            )
            written.append(str(fig_path))

    corrupt_text = _resolve(args, config, "corrupt", None)
    if corrupt_text is not None:
        spec = _parse_corrupt_spec(str(corrupt_text))
        sweep = _run_corruption_sweep(
            data, methods, dims[0], folds, seed, spec, policy
        )
        combined["corruption_sweep"] = sweep
        sweep_path = output.with_name(output.stem + "_corruption.csv")
        rows = [
            (r["sample_fraction"], r["classes_corrupted"], r["method"],
             repr(r["mean_accuracy"]),
             "" if r["accuracy_drop"] is None else repr(r["accuracy_drop"]))
            for r in sweep
        ]
        atomic_write_text(
            sweep_path,
            _csv_text(
                ["sample_fraction", "classes_corrupted", "method",
                 "mean_accuracy", "accuracy_drop"],
                rows,
            ),
        )
        written.append(str(sweep_path))
        if not args.no_figures:
            from . import figures

            series = {}
            for r in sweep:
                key = f"{r['method']} frac={r['sample_fraction']}"
                series.setdefault(key, []).append(
                    (r["classes_corrupted"], r["mean_accuracy"])
                )
            fig_path = figures.render_line_sweep(
                series, "corrupted classes", "mean accuracy",
                output.with_name(output.stem + "_corruption.png"),
            )
            written.append(str(fig_path))

    atomic_write_text(output, json.dumps(combined, indent=2) + "\n")
    return {"command": "eval", "output": str(output), "files": written,
            "methods": methods, "dims": dims}


# ---------------------------------------------------------------------------
# plot-data


def cmd_plot_data(args) -> dict:
    config = _load_config(args.config)
    model_path = _resolve(args, config, "model", None) or _missing("plot-data", "--model")
    input_path = _resolve(args, config, "input", None) or _missing("plot-data", "-i/--input")
    prefix = Path(_resolve(args, config, "output", "plot"))
    bins = int(_resolve(args, config, "bins", 50))
    runs = int(_resolve(args, config, "runs", 100))

    model = load_model(model_path)
    data = load_csv(
        input_path,
        _label_selector(str(_resolve(args, config, "label_column", "label"))),
    )
    W = model["W"]
    if W.shape[0] != data.feature_count:
        raise ValueError(
            f"model expects {W.shape[0]} features, dataset has {data.feature_count}"
        )
    m = int(model["m"])
    if m > 2:
        raise ValueError(f"scatter export supports at most 2 dimensions, got m={m}")

    written = export_projection_plot(data, W, prefix, bins=bins)
    files = {name: str(path) for name, path in written.items()}

    coords = W.T @ data.features
    if not args.no_figures:
        from . import figures

        if m == 2:
            files["points_figure"] = str(
                figures.render_scatter(coords, data.labels, _sibling(prefix, "_points.png"))
            )
        else:
            hist_rows = _read_hist_rows(written["histogram"])
            files["histogram_figure"] = str(
                figures.render_histogram(hist_rows, _sibling(prefix, "_hist.png"))
            )

    objectives = model.get("objective_trace") or []
    if objectives:
        trace_path = _sibling(prefix, "_trace.csv")
        write_trace_csv(trace_path, objectives)
        files["trace"] = str(trace_path)
        if not args.no_figures:
            from . import figures

            files["trace_figure"] = str(
                figures.render_trace(objectives, _sibling(prefix, "_trace.png"))
            )

    method = model.get("source", "swrlda")
    solver_config = None
    if method == "swrlda" and model.get("config"):
        solver_config = SolverConfig.from_dict(model["config"])
    sweep_rows = []
    for dim in range(1, min(data.class_count - 1, data.feature_count) + 1):
        value = mean_min_pairwise_distance(
            data, method, dim, runs=runs, solver_config=solver_config
        )
        sweep_rows.append((dim, value))
    mindist_path = _sibling(prefix, "_mindist.csv")
    atomic_write_text(
        mindist_path,
        _csv_text(
            ["m", "mean_min_pairwise_distance"],
            [(dim, repr(value)) for dim, value in sweep_rows],
        ),
    )
    files["mindist"] = str(mindist_path)
    if not args.no_figures:
        from . import figures

        files["mindist_figure"] = str(
            figures.render_line_sweep(
                {method: sweep_rows}, "projected dimension",
                "mean minimum pairwise distance", _sibling(prefix, "_mindist.png"),
            )
        )
    return {"command": "plot-data", "files": files}


def _sibling(prefix: Path, suffix: str) -> Path:
    return prefix.parent / (prefix.name + suffix)


def _read_hist_rows(path):
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for left, right, label, count in reader:
            rows.append((float(left), float(right), int(label), int(count)))
    return rows


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swrlda",
        description="Self-weighted robust LDA: synthesis, fitting, evaluation, plot data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override its entries")
        p.add_argument("--no-timing", action="store_true",
                       help="exclude wall-clock timings from outputs")

    p_synth = sub.add_parser("synth", help="generate a synthetic Gaussian dataset")
    add_common(p_synth)
    p_synth.add_argument("--preset", choices=sorted(_PRESETS))
    p_synth.add_argument("--spec", help="JSON file with means/covariance/samples_per_class")
    p_synth.add_argument("--seed", type=int)
    p_synth.add_argument("--samples", type=_positive_int,
                         help="samples per class (presets only)")
    p_synth.add_argument("-o", "--output", help="output CSV path")
    p_synth.set_defaults(func=cmd_synth)

    p_fit = sub.add_parser("fit", help="fit a projection and write a model snapshot")
    add_common(p_fit)
    p_fit.add_argument("-i", "--input", help="dataset CSV")
    p_fit.add_argument("--label-column", dest="label_column",
                       help="label column name or 0-based index (default: label)")
    p_fit.add_argument("--method", choices=["swrlda", "lda", "flda"])
    p_fit.add_argument("-m", type=_positive_int, help="projection dimension")
    p_fit.add_argument("--seed", type=int)
    p_fit.add_argument("--tol", type=float, help="relative objective-change threshold")
    p_fit.add_argument("--max-iter", dest="max_iter", type=_positive_int)
    p_fit.add_argument("--assembly", choices=["fast", "naive"])
    p_fit.add_argument("--epsilon", type=float, help="ridge policy value")
    p_fit.add_argument("--epsilon-kind", dest="epsilon_kind",
                       choices=["relative", "absolute"])
    p_fit.add_argument("-o", "--output", help="model JSON path")
    p_fit.add_argument("--trace", help="trace CSV path")
    p_fit.set_defaults(func=cmd_fit)

    p_eval = sub.add_parser("eval", help="cross-validated evaluation report")
    add_common(p_eval)
    p_eval.add_argument("-i", "--input", help="dataset CSV")
    p_eval.add_argument("--label-column", dest="label_column")
    p_eval.add_argument("--methods", help="comma-separated: swrlda,lda,flda")
    p_eval.add_argument("-m", type=_positive_int, help="projection dimension")
    p_eval.add_argument("--dims", help="dimension sweep, e.g. 1..3")
    p_eval.add_argument("--folds", type=_positive_int)
    p_eval.add_argument("--seed", type=int)
    p_eval.add_argument("--corrupt",
                        help="robustness sweep, e.g. classes=0..3,frac=0.2+0.4,pixel=0.3,seeds=5")
    p_eval.add_argument("--epsilon", type=float)
    p_eval.add_argument("--epsilon-kind", dest="epsilon_kind",
                        choices=["relative", "absolute"])
    p_eval.add_argument("-o", "--output", help="report JSON path")
    p_eval.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering next to sweep tables")
    p_eval.set_defaults(func=cmd_eval)

    p_plot = sub.add_parser("plot-data",
                            help="projection/trace/distance plot data (+ figures)")
    add_common(p_plot)
    p_plot.add_argument("--model", help="model snapshot JSON from fit")
    p_plot.add_argument("-i", "--input", help="dataset CSV")
    p_plot.add_argument("--label-column", dest="label_column")
    p_plot.add_argument("-o", "--output", help="output path prefix")
    p_plot.add_argument("--bins", type=_positive_int, help="histogram bin count")
    p_plot.add_argument("--runs", type=_positive_int,
                        help="seeded repetitions for the distance sweep")
    p_plot.add_argument("--no-figures", action="store_true")
    p_plot.set_defaults(func=cmd_plot_data)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        summary = args.func(args)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _print_summary(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
