"""Command-line interface.

Subcommands cover the synthesis pipeline end to end: ``scenario`` resolves
a preset or YAML configuration into explicit path lists, ``synthesize``
assembles channel tensors, ``generate-aaf`` produces standalone
attenuation-factor sequences, ``evaluate`` computes metrics (with CDF data
files), and ``compare`` reports pairwise distribution distances between
channels.

Exit codes: 0 on success, 2 for configuration errors, 3 for numerical or
geometric failures.  Identical configuration and seed reproduce output
files byte for byte.

The environment variable ``XLMIMO_NUM_THREADS`` caps the linear-algebra
thread pools; it is applied before numpy is first imported, so the heavy
imports in this module are deliberately deferred.
"""

from __future__ import annotations

import argparse
import os
import sys

from ._threads import apply_thread_env
from .errors import ConfigError, GeometryError, NumericError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlmimo",
        description=(
            "Near-field, spatially non-stationary channel synthesis for "
            "extremely large aperture arrays"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    out_parent = argparse.ArgumentParser(add_help=False)
    out_parent.add_argument("--out", required=True, help="output directory")
    out_parent.add_argument(
        "--seed", type=int, default=None, help="override the configuration seed"
    )

    config_parent = argparse.ArgumentParser(add_help=False)
    group = config_parent.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", help="named scenario preset")
    group.add_argument("--config", help="scenario configuration YAML file")
    config_parent.add_argument(
        "--variant",
        default=None,
        help="override the synthesis variant (nf-sns, nf-ss, ff-sns, ff-ss, vr)",
    )

    p = sub.add_parser(
        "scenario",
        parents=[out_parent, config_parent],
        help="resolve a scenario into explicit per-user path lists",
    )
    p.set_defaults(func=_cmd_scenario)

    p = sub.add_parser(
        "synthesize",
        parents=[out_parent, config_parent],
        help="synthesize the channel tensor for a scenario",
    )
    p.add_argument(
        "--paths",
        action="append",
        default=None,
        help="path-list CSV (repeat per user) instead of scenario-built paths",
    )
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser(
        "generate-aaf",
        parents=[out_parent],
        help="generate spatially correlated amplitude attenuation factors",
    )
    p.add_argument("--elements", type=int, required=True, help="sequence length")
    p.add_argument("--sequences", type=int, default=1, help="number of sequences")
    p.add_argument("--p", type=float, default=None, help="fixed Beta shape p")
    p.add_argument("--q", type=float, default=None, help="fixed Beta shape q")
    p.add_argument(
        "--dcorr", type=float, default=None, help="fixed correlation decay rate"
    )
    p.add_argument(
        "--config", default=None, help="YAML file with an aaf hyper-parameter block"
    )
    p.set_defaults(func=_cmd_generate_aaf)

    for name, helptext, func in (
        ("evaluate", "compute metrics for one or more channels", _cmd_evaluate),
        ("compare", "pairwise distribution distances between channels", _cmd_compare),
    ):
        p = sub.add_parser(name, parents=[out_parent], help=helptext)
        p.add_argument(
            "--channel",
            action="append",
            required=True,
            help="channel basepath (the .json/.bin pair from synthesize)",
        )
        p.add_argument(
            "--metrics",
            default="capacity,demmel",
            help=(
                "comma list from: capacity, demmel, gain, kfactor, "
                "delay-spread, spatial-correlation"
            ),
        )
        p.add_argument("--num-ues", type=int, default=4, help="users per trial")
        p.add_argument("--trials", type=int, default=800, help="number of trials")
        p.add_argument("--snr-db", type=float, default=15.0, help="SNR in dB")
        p.add_argument(
            "--max-lag", type=int, default=100, help="largest spatial-correlation lag"
        )
        p.set_defaults(func=func)

    return parser


def main(argv=None) -> int:
    try:
        apply_thread_env()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GeometryError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def _ensure_out(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _resolve_config(args) -> dict:
    from .scenario import preset, validate_config
    from .serialization import read_yaml

    if args.preset:
        cfg = preset(args.preset)
    else:
        cfg = read_yaml(args.config)
    if getattr(args, "variant", None):
        cfg["variant"] = args.variant
    if args.seed is not None:
        cfg["seed"] = args.seed
    try:
        return validate_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_scenario(args) -> int:
    import numpy as np

    from . import scenario
    from .geometry import rayleigh_distance
    from .serialization import write_json, write_paths_csv, write_yaml

    cfg = _resolve_config(args)
    out = _ensure_out(args)
    geometry = scenario.build_geometry(cfg)
    grid = scenario.build_grid(cfg)
    all_paths = scenario.build_all_paths(cfg)

    write_yaml(os.path.join(out, "scenario.yaml"), cfg)
    for ue, paths in enumerate(all_paths):
        write_paths_csv(os.path.join(out, f"paths_ue{ue:03d}.csv"), paths)
    distances = [
        float(np.linalg.norm(np.asarray(u) - geometry.origin)) for u in cfg["ues"]
    ]
    write_json(
        os.path.join(out, "summary.json"),
        {
            "name": cfg["name"],
            "num_ues": len(all_paths),
            "paths_per_ue": [len(p) for p in all_paths],
            "aperture_m": geometry.aperture,
            "carrier_hz": grid.carrier_hz,
            "rayleigh_distance_m": rayleigh_distance(
                geometry.aperture, grid.carrier_hz
            ),
            "min_ue_distance_m": min(distances),
            "max_ue_distance_m": max(distances),
        },
    )
    return 0


def _needs_seed(variant: str, all_paths) -> bool:
    from .nearfield import Stationarity

    if variant.endswith("-ss"):
        return False
    return any(
        p.stationarity is Stationarity.NON_STATIONARY and p.aaf is None
        for paths in all_paths
        for p in paths
    )


def _cmd_synthesize(args) -> int:
    from . import scenario
    from .channel import assemble, build_variant_aaf, multi_user, path_table
    from .serialization import (
        config_sha256,
        read_paths_csv,
        write_channel,
        write_json,
        write_paths_csv,
        write_table,
        write_yaml,
    )

    cfg = _resolve_config(args)
    out = _ensure_out(args)
    geometry = scenario.build_geometry(cfg)
    grid = scenario.build_grid(cfg)
    tx_pattern, rx_pattern = scenario.build_patterns(cfg)
    params = scenario.build_aaf_params(cfg)
    variant = cfg["variant"]
    seed = cfg["seed"]

    if args.paths:
        all_paths = [read_paths_csv(path) for path in args.paths]
    else:
        all_paths = scenario.build_all_paths(cfg)
    if _needs_seed(variant, all_paths) and seed is None:
        raise ConfigError(
            "seed is required: the variant generates random attenuation factors"
        )

    force_ff = variant.startswith("ff-") or variant == "vr"
    sha = config_sha256(cfg)
    tensors = []
    table_rows = []
    for ue, paths in enumerate(all_paths):
        aaf = build_variant_aaf(
            paths,
            geometry.num_elements,
            variant,
            params=params,
            seed=seed,
            stream_key=(ue,),
        )
        tensors.append(
            assemble(
                paths,
                geometry,
                tx_pattern,
                rx_pattern,
                grid,
                aaf=aaf,
                variant=variant,
                seed=seed,
            )
        )
        table = path_table(
            paths,
            geometry,
            tx_pattern,
            rx_pattern,
            grid.carrier_hz,
            aaf,
            force_ff=force_ff,
        )
        for l, path in enumerate(paths):
            for m in range(geometry.num_elements):
                table_rows.append(
                    [
                        ue,
                        l,
                        m,
                        path.amplitude,
                        aaf[m, l],
                        table.amplitudes[m, l],
                        table.delays[m, l],
                        table.phases[m, l],
                        table.distances[m, l],
                    ]
                )

    combined = multi_user(tensors)
    combined.config_sha256 = sha
    write_channel(
        os.path.join(out, "channel"),
        combined,
        extra_meta={"name": cfg["name"], "num_ues": combined.num_users},
    )
    write_yaml(os.path.join(out, "scenario.yaml"), cfg)
    for ue, paths in enumerate(all_paths):
        write_paths_csv(os.path.join(out, f"paths_ue{ue:03d}.csv"), paths)
    write_table(
        os.path.join(out, "pathtable.csv"),
        [
            "ue",
            "path",
            "element",
            "alpha_ref",
            "aaf",
            "amplitude",
            "delay_s",
            "phase_rad",
            "distance_m",
        ],
        table_rows,
    )
    write_json(
        os.path.join(out, "meta.json"),
        {
            "name": cfg["name"],
            "variant": variant,
            "seed": seed,
            "config_sha256": sha,
            "num_ues": combined.num_users,
            "num_paths": [len(p) for p in all_paths],
        },
    )
    return 0


def _cmd_generate_aaf(args) -> int:
    import numpy as np

    from .scenario import build_aaf_params
    from .serialization import read_yaml, write_json, write_table
    from .sns import acf, fit_dcorr, generate_aaf, sample_aaf_params

    if args.elements < 1:
        raise ConfigError(f"--elements must be >= 1, got {args.elements}")
    if args.sequences < 1:
        raise ConfigError(f"--sequences must be >= 1, got {args.sequences}")
    if args.seed is None:
        raise ConfigError("--seed is required: generation is stochastic")
    fixed = (args.p, args.q, args.dcorr)
    if any(v is not None for v in fixed) and not all(v is not None for v in fixed):
        raise ConfigError("--p, --q, and --dcorr must be given together")
    try:
        params = build_aaf_params(read_yaml(args.config) if args.config else {})
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"aaf: {exc}") from exc

    out = _ensure_out(args)
    value_rows = []
    param_rows = []
    acf_rows = []
    for seq in range(args.sequences):
        rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(seq,)))
        if args.p is not None:
            p, q, d_corr = args.p, args.q, args.dcorr
        else:
            p, q, d_corr = sample_aaf_params(params, rng)
        try:
            values = generate_aaf(args.elements, p, q, d_corr, rng)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for m, v in enumerate(values):
            value_rows.append([seq, m, v])
        if args.elements >= 3:
            series = acf(values)
            fitted = fit_dcorr(series, max_lag=min(args.elements - 1, 100))
            for lag, value in zip(series.lags, series.values):
                acf_rows.append([seq, int(lag), value])
        else:
            fitted = float("nan")
        param_rows.append([seq, p, q, d_corr, fitted])

    write_table(os.path.join(out, "aaf.csv"), ["sequence", "element", "value"], value_rows)
    write_table(
        os.path.join(out, "aaf_params.csv"),
        ["sequence", "p", "q", "d_corr", "fitted_dcorr"],
        param_rows,
    )
    if acf_rows:
        write_table(
            os.path.join(out, "acf.csv"), ["sequence", "lag", "value"], acf_rows
        )
    write_json(
        os.path.join(out, "meta.json"),
        {
            "elements": args.elements,
            "sequences": args.sequences,
            "seed": args.seed,
            "fixed_params": None
            if args.p is None
            else {"p": args.p, "q": args.q, "d_corr": args.dcorr},
        },
    )
    return 0


_METRICS = ("capacity", "demmel", "gain", "kfactor", "delay-spread", "spatial-correlation")


def _parse_metrics(spec: str) -> list:
    metrics = [m.strip() for m in spec.split(",") if m.strip()]
    if not metrics:
        raise ConfigError("--metrics must name at least one metric")
    unknown = [m for m in metrics if m not in _METRICS]
    if unknown:
        raise ConfigError(
            f"unknown metrics: {', '.join(unknown)}; available: {', '.join(_METRICS)}"
        )
    return metrics


def _load_channels(args) -> list:
    """Load channels as (label, tensor, meta, directory) tuples."""
    from .serialization import read_channel

    loaded = []
    seen = {}
    for path in args.channel:
        tensor, meta = read_channel(path)
        base = os.path.basename(path)
        if base.endswith(".json"):
            base = base[: -len(".json")]
        label = f"{base}_{meta.get('variant', 'unknown')}"
        seen[label] = seen.get(label, 0) + 1
        if seen[label] > 1:
            label = f"{label}_{seen[label]}"
        directory = os.path.dirname(os.path.abspath(path))
        loaded.append((label, tensor, meta, directory))
    return loaded


def _read_pathtable(directory: str):
    """Per-user amplitude/delay/aaf/alpha matrices from pathtable.csv."""
    import csv as _csv

    import numpy as np

    table_path = os.path.join(directory, "pathtable.csv")
    if not os.path.exists(table_path):
        raise ConfigError(
            f"{table_path} not found: per-path metrics need the synthesize "
            f"output directory"
        )
    rows = []
    with open(table_path, newline="") as fh:
        for row in _csv.DictReader(fh):
            rows.append(
                (
                    int(row["ue"]),
                    int(row["path"]),
                    int(row["element"]),
                    float(row["alpha_ref"]),
                    float(row["aaf"]),
                    float(row["amplitude"]),
                    float(row["delay_s"]),
                )
            )
    if not rows:
        raise ConfigError(f"{table_path}: empty table")
    num_ues = max(r[0] for r in rows) + 1
    out = []
    for ue in range(num_ues):
        ue_rows = [r for r in rows if r[0] == ue]
        num_paths = max(r[1] for r in ue_rows) + 1
        num_elements = max(r[2] for r in ue_rows) + 1
        amplitude = np.zeros((num_elements, num_paths))
        delay = np.zeros((num_elements, num_paths))
        aaf = np.zeros((num_elements, num_paths))
        alpha = np.zeros(num_paths)
        for _, l, m, alpha_ref, aaf_v, amp, dl in ue_rows:
            amplitude[m, l] = amp
            delay[m, l] = dl
            aaf[m, l] = aaf_v
            alpha[l] = alpha_ref
        out.append(
            {"amplitude": amplitude, "delay": delay, "aaf": aaf, "alpha": alpha}
        )
    return out


def _metric_samples(label, tensor, directory, metrics, args):
    """Sample vectors per metric for one channel; None for curve metrics."""
    import numpy as np

    from . import metrics as mx

    samples = {}
    if "capacity" in metrics or "demmel" in metrics:
        if args.seed is None:
            raise ConfigError("--seed is required for capacity/demmel trials")
        if not 1 <= args.num_ues <= tensor.num_users:
            raise ConfigError(
                f"--num-ues must be in [1, {tensor.num_users}] for {label}"
            )
        rng = np.random.default_rng(np.random.SeedSequence(args.seed))
        capacity, demmel = mx.multiuser_trials(
            tensor.values, args.num_ues, args.trials, rng, snr_db=args.snr_db
        )
        if "capacity" in metrics:
            samples["capacity"] = capacity
        if "demmel" in metrics:
            samples["demmel"] = demmel
    if any(m in metrics for m in ("gain", "kfactor", "delay-spread")):
        tables = _read_pathtable(directory)
        if "gain" in metrics:
            samples["gain"] = np.concatenate(
                [mx.path_gain_db(t["amplitude"]) for t in tables]
            )
        if "kfactor" in metrics:
            samples["kfactor"] = np.concatenate(
                [mx.rician_k_db(t["amplitude"]) for t in tables]
            )
        if "delay-spread" in metrics:
            samples["delay-spread"] = np.concatenate(
                [
                    mx.rms_delay_spread(t["amplitude"] ** 2, t["delay"])
                    for t in tables
                ]
            )
    return samples


def _spatial_correlation_curve(directory, max_lag):
    import numpy as np

    from . import metrics as mx
    from .errors import NumericError as _NumericError

    tables = _read_pathtable(directory)
    num_paths = tables[0]["aaf"].shape[1]
    if num_paths < 2:
        raise ConfigError(
            f"spatial-correlation needs at least two paths per user, got {num_paths}"
        )
    num_elements = tables[0]["aaf"].shape[0]
    lags = range(1, min(int(max_lag), num_elements - 1) + 1)
    curve = []
    for lag in lags:
        values = []
        for t in tables:
            matrix = mx.sns_amplitude_matrix(t["aaf"], t["alpha"])
            try:
                values.append(mx.avg_spatial_correlation(matrix, lag))
            except _NumericError:
                values.append(float("nan"))
        curve.append([lag, float(np.nanmean(values)) if values else float("nan")])
    return curve


def _write_samples(out, label, metric, values) -> None:
    import numpy as np

    from .serialization import write_table

    safe = metric.replace("-", "_")
    write_table(
        os.path.join(out, f"{label}_{safe}_samples.csv"),
        ["index", "value"],
        [[i, v] for i, v in enumerate(values)],
    )
    finite = np.sort(np.asarray(values, dtype=float))
    probs = (np.arange(finite.size) + 1) / finite.size
    write_table(
        os.path.join(out, f"{label}_{safe}_cdf.csv"),
        ["value", "probability"],
        [[v, p] for v, p in zip(finite, probs)],
    )


def _evaluate_channels(args, write_per_channel: bool) -> int:
    import warnings

    import numpy as np

    from . import metrics as mx
    from .serialization import write_json, write_table

    metrics = _parse_metrics(args.metrics)
    out = _ensure_out(args)
    loaded = _load_channels(args)
    all_samples = {}
    summary_rows = []
    for label, tensor, _meta, directory in loaded:
        samples = _metric_samples(label, tensor, directory, metrics, args)
        all_samples[label] = samples
        for metric in metrics:
            if metric == "spatial-correlation":
                curve = _spatial_correlation_curve(directory, args.max_lag)
                if write_per_channel:
                    write_table(
                        os.path.join(out, f"{label}_spatial_correlation.csv"),
                        ["lag", "value"],
                        curve,
                    )
                continue
            values = np.asarray(samples[metric], dtype=float)
            if write_per_channel:
                _write_samples(out, label, metric, values)
            finite = values[np.isfinite(values)]
            summary_rows.append(
                [
                    label,
                    metric,
                    values.size,
                    int(values.size - finite.size),
                    float(np.mean(finite)) if finite.size else float("nan"),
                ]
            )

    write_table(
        os.path.join(out, "metrics_summary.csv"),
        ["label", "metric", "count", "non_finite", "mean"],
        summary_rows,
    )

    if len(loaded) >= 2:
        labels = [label for label, *_ in loaded]
        for metric in metrics:
            if metric == "spatial-correlation":
                continue
            rows = []
            for i in range(len(labels)):
                for j in range(i + 1, len(labels)):
                    a = np.asarray(all_samples[labels[i]][metric], dtype=float)
                    b = np.asarray(all_samples[labels[j]][metric], dtype=float)
                    fa, fb = a[np.isfinite(a)], b[np.isfinite(b)]
                    if fa.size < a.size or fb.size < b.size:
                        warnings.warn(
                            f"{metric}: dropping non-finite samples before "
                            f"distance computation"
                        )
                    if fa.size == 0 or fb.size == 0:
                        warnings.warn(
                            f"{metric}: no finite samples, recording nan distance"
                        )
                        distance = float("nan")
                    else:
                        distance = mx.cvm_distance(fa, fb)
                    rows.append([labels[i], labels[j], distance])
            write_table(
                os.path.join(out, f"cvm_{metric.replace('-', '_')}.csv"),
                ["label_a", "label_b", "distance"],
                rows,
            )

    write_json(
        os.path.join(out, "meta.json"),
        {
            "channels": [label for label, *_ in loaded],
            "metrics": metrics,
            "num_ues": args.num_ues,
            "trials": args.trials,
            "snr_db": args.snr_db,
            "seed": args.seed,
        },
    )
    return 0


def _cmd_evaluate(args) -> int:
    return _evaluate_channels(args, write_per_channel=True)


def _cmd_compare(args) -> int:
    if len(args.channel) < 2:
        raise ConfigError("compare needs at least two --channel inputs")
    return _evaluate_channels(args, write_per_channel=False)


if __name__ == "__main__":
    sys.exit(main())
