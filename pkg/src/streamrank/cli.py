"""Command-line gateway: synth / ingest / detect / rank / evaluate / serve.

Flags mirror the run configuration one-to-one; a flat key=value config file
supplies defaults and explicit CLI flags override it. Unknown config keys are
rejected before any work starts.

Exit status: 0 success, 2 configuration error, 3 data error, 4 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import os
import shutil
import sys

from . import detectors as det
from . import ranking as rk
from .errors import ConfigError, DataError, StreamRankError
from .hierarchy import load_hierarchy_path
from .store import StreamStore
from .synth import (
    SyntheticSpec,
    delphi_scale_hierarchy,
    delphi_scale_spec,
    generate_corpus,
    load_labels_csv,
    standard_corpus_spec,
    tiny_corpus_spec,
)

def _split_csv(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if str(value).lower() in ("1", "true", "yes", "on"):
        return True
    if str(value).lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


# dest -> (type, default, help); default REQUIRED means the key must be provided.
REQUIRED = object()

SUBCOMMANDS: dict[str, dict[str, tuple]] = {
    "synth": {
        "out": (str, REQUIRED, "output directory for the corpus files"),
        "preset": (str, "standard", "standard | tiny | delphi | custom"),
        "seed": (int, None, "override the preset seed"),
        "days": (int, None, "override the preset day count"),
        "branching": (str, None, "tier branching for preset=custom, e.g. 5,8,10"),
        "missing_rate": (float, None, "override the preset missing rate"),
        "indicator": (str, None, "override the indicator name"),
    },
    "ingest": {
        "store": (str, REQUIRED, "store directory (created if absent)"),
        "observations": (str, REQUIRED, "comma-separated observation CSV paths"),
        "hierarchy": (str, None, "hierarchy CSV (required when creating a store)"),
        "epoch": (str, None, "ISO date of day 0 (default: first date seen)"),
    },
    "detect": {
        "store": (str, REQUIRED, "store directory"),
        "indicator": (str, None, "indicator to detect (default: all)"),
        "detector": (str, "ewma", "ewma | ar"),
        "tau": (float, None, "ewma decay constant"),
        "kernel_halfwidth": (int, None, "ewma kernel halfwidth"),
        "order": (int, None, "ar lag order"),
        "smooth_bandwidth": (float, None, "optional Gaussian pre-smoothing bandwidth"),
        "out": (str, None, "surface output dir (default: <store>/surfaces)"),
    },
    "rank": {
        "store": (str, REQUIRED, "store directory"),
        "date": (str, REQUIRED, "date to rank (ISO)"),
        "to_date": (str, None, "rank every date from --date through this one"),
        "method": (str, "outshines", "outshines | sibling | threshold"),
        "detector": (str, "ewma", "detector for end-to-end runs"),
        "surface": (str, None, "explicit surface CSV (skips detection)"),
        "indicator": (str, None, "restrict to one indicator"),
        "delta": (int, 14, "regime halfwidth in days"),
        "threshold_quantile": (float, 0.99, "threshold method quantile"),
        "limit": (int, None, "write only the top N rows"),
        "out": (str, None, "rankings output dir (default: <store>/rankings)"),
    },
    "evaluate": {
        "store": (str, REQUIRED, "store directory"),
        "labels": (str, REQUIRED, "ground-truth labels CSV"),
        "from_date": (str, REQUIRED, "first evaluated date (ISO)"),
        "to_date": (str, REQUIRED, "last evaluated date (ISO)"),
        "methods": (str, "outshines,sibling,threshold", "comma-separated methods"),
        "detectors": (str, "ewma", "comma-separated detectors"),
        "delta": (int, 14, "regime halfwidth in days"),
        "threshold_quantile": (float, 0.99, "threshold method quantile"),
        "timing_runs": (int, 3, "timing repetitions (0 disables timing)"),
        "parallel": (bool, False, "run cells concurrently; timings are blanked"),
        "figures": (bool, True, "render figure files next to metrics.csv"),
        "out": (str, REQUIRED, "report output directory"),
    },
    "serve": {
        "store": (str, REQUIRED, "store directory"),
        "rankings": (str, None, "rankings dir (default: <store>/rankings)"),
        "labels_store": (str, None, "label JSONL path (default: <store>/labels.jsonl)"),
        "host": (str, "127.0.0.1", "bind host"),
        "port": (int, 8004, "bind port"),
    },
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamrank", description=__doc__)
    parser.add_argument("--config", help="flat key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, spec in SUBCOMMANDS.items():
        p = sub.add_parser(name)
        for dest, (typ, default, help_text) in spec.items():
            flag = "--" + dest.replace("_", "-")
            if typ is bool:
                p.add_argument(flag, dest=dest, default=argparse.SUPPRESS,
                               action=argparse.BooleanOptionalAction, help=help_text)
            else:
                p.add_argument(flag, dest=dest, type=typ, default=argparse.SUPPRESS, help=help_text)
    return parser


def _load_config_file(path: str) -> dict[str, str]:
    if not os.path.exists(path):
        raise ConfigError(f"config file {path!r} does not exist")
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def resolve_options(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit CLI flags; unknown config keys rejected."""
    spec = SUBCOMMANDS[args.command]
    options = {dest: default for dest, (_, default, _h) in spec.items()}
    if args.config:
        for key, raw in _load_config_file(args.config).items():
            if key not in spec:
                raise ConfigError(f"unknown config key {key!r} for subcommand {args.command!r}")
            typ = spec[key][0]
            try:
                options[key] = _parse_bool(raw) if typ is bool else typ(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from None
    for dest in spec:
        if hasattr(args, dest):
            options[dest] = getattr(args, dest)
    missing = [dest for dest, value in options.items() if value is REQUIRED]
    if missing:
        flags = ", ".join("--" + m.replace("_", "-") for m in sorted(missing))
        raise ConfigError(f"missing required option(s): {flags}")
    return options


# ---------------------------------------------------------------------------


def cmd_synth(opts: dict) -> int:
    preset = opts["preset"]
    hierarchy = None
    if preset == "standard":
        spec = standard_corpus_spec()
    elif preset == "tiny":
        spec = tiny_corpus_spec()
    elif preset == "delphi":
        spec = delphi_scale_spec()
        hierarchy = delphi_scale_hierarchy()
    elif preset == "custom":
        if not opts["branching"]:
            raise ConfigError("preset=custom requires --branching")
        spec = SyntheticSpec(
            seed=opts["seed"] if opts["seed"] is not None else 1,
            tier_branching=tuple(int(b) for b in _split_csv(opts["branching"])),
            days=opts["days"] if opts["days"] is not None else 300,
        )
    else:
        raise ConfigError(f"unknown preset {preset!r}")

    overrides = {}
    if opts["seed"] is not None and preset != "custom":
        overrides["seed"] = opts["seed"]
    if opts["days"] is not None and preset != "custom":
        overrides["days"] = opts["days"]
    if opts["missing_rate"] is not None:
        overrides["missing_rate"] = opts["missing_rate"]
    if opts["indicator"] is not None:
        overrides["indicator"] = opts["indicator"]
    if overrides:
        spec = dataclasses.replace(spec, **overrides)

    corpus = generate_corpus(spec, hierarchy=hierarchy)
    paths = corpus.write(opts["out"])
    print(f"synth: {len(corpus.observations)} observations, {len(corpus.labels)} labels")
    for kind, path in sorted(paths.items()):
        print(f"  {kind}: {path}")
    return 0


def _open_store(store_dir: str) -> StreamStore:
    hierarchy_path = os.path.join(store_dir, "hierarchy.csv")
    if not os.path.exists(os.path.join(store_dir, "meta.json")):
        raise DataError(f"{store_dir!r} is not a store (run `streamrank ingest` first)")
    hierarchy = load_hierarchy_path(hierarchy_path)
    return StreamStore.load(store_dir, hierarchy)


def cmd_ingest(opts: dict) -> int:
    store_dir = opts["store"]
    meta_path = os.path.join(store_dir, "meta.json")
    if os.path.exists(meta_path):
        store = _open_store(store_dir)
    else:
        if not opts["hierarchy"]:
            raise ConfigError("creating a new store requires --hierarchy")
        hierarchy = load_hierarchy_path(opts["hierarchy"])
        epoch = dt.date.fromisoformat(opts["epoch"]) if opts["epoch"] else None
        store = StreamStore(hierarchy, epoch=epoch)
        os.makedirs(store_dir, exist_ok=True)
        shutil.copyfile(opts["hierarchy"], os.path.join(store_dir, "hierarchy.csv"))

    totals = [0, 0, 0]
    for path in _split_csv(opts["observations"]):
        if not os.path.exists(path):
            raise DataError(f"observation file {path!r} does not exist")
        with open(path, encoding="utf-8") as fh:
            report = store.ingest(fh.read())
        totals[0] += report.rows
        totals[1] += report.upserts
        totals[2] += report.rejects
        print(f"ingest {path}: rows={report.rows} upserts={report.upserts} rejects={report.rejects}")
        for line, reason in report.reject_details[:10]:
            print(f"  reject line {line}: {reason}")
    store.save(store_dir)
    print(f"ingest total: rows={totals[0]} upserts={totals[1]} rejects={totals[2]}")
    return 0


def _make_detector(opts: dict):
    name = opts["detector"]
    if name == "ewma":
        kwargs = {}
        if opts.get("tau") is not None:
            kwargs["tau"] = opts["tau"]
        if opts.get("kernel_halfwidth") is not None:
            kwargs["kernel_halfwidth"] = opts["kernel_halfwidth"]
        return det.EwmaDetector(det.EwmaConfig(**kwargs)) if kwargs else det.EwmaDetector()
    if name == "ar":
        return det.ArDetector(opts["order"]) if opts.get("order") else det.ArDetector()
    raise ConfigError(f"unknown detector {name!r}")


def _surface_path(out_dir: str, indicator: str, detector_id: str) -> str:
    return os.path.join(out_dir, f"{indicator}__{detector_id}.csv")


def cmd_detect(opts: dict) -> int:
    store = _open_store(opts["store"])
    detector = _make_detector(opts)
    out_dir = opts["out"] or os.path.join(opts["store"], "surfaces")
    os.makedirs(out_dir, exist_ok=True)
    indicators = [opts["indicator"]] if opts["indicator"] else store.indicators
    for indicator in indicators:
        surface = det.compute_surface(
            store, store.hierarchy, indicator, detector,
            smooth_bandwidth=opts["smooth_bandwidth"],
        )
        path = _surface_path(out_dir, indicator, detector.id)
        det.write_surface_csv(surface, store.date_of, path)
        print(f"detect {indicator}: {surface.entry_count()} phi values -> {path}")
    return 0


def _load_or_compute_surface(store, opts, indicator: str):
    if opts.get("surface"):
        return det.load_surface_csv(opts["surface"], store.day_of)
    surfaces_dir = os.path.join(opts["store"], "surfaces")
    detector = _make_detector(opts)
    path = _surface_path(surfaces_dir, indicator, detector.id)
    if os.path.exists(path):
        return det.load_surface_csv(path, store.day_of)
    return det.compute_surface(store, store.hierarchy, indicator, detector)


def cmd_rank(opts: dict) -> int:
    store = _open_store(opts["store"])
    cfg = rk.RankingConfig(
        regime_halfwidth=opts["delta"],
        threshold_quantile=opts["threshold_quantile"],
        method=opts["method"],
    )
    out_dir = opts["out"] or os.path.join(opts["store"], "rankings")
    os.makedirs(out_dir, exist_ok=True)

    first = dt.date.fromisoformat(opts["date"])
    last = dt.date.fromisoformat(opts["to_date"]) if opts["to_date"] else first
    if last < first:
        raise ConfigError("--to-date precedes --date")

    indicators = [opts["indicator"]] if opts["indicator"] else store.indicators
    surfaces = {i: _load_or_compute_surface(store, opts, i) for i in indicators}

    date = first
    while date <= last:
        t = store.day_of(date)
        points = []
        for indicator in indicators:
            points.extend(rk.rank_day(surfaces[indicator], store.hierarchy, t, cfg))
        points.sort(key=lambda p: (-p.score, p.indicator, p.region))
        if opts["limit"] is not None:
            points = points[: opts["limit"]]
        path = os.path.join(out_dir, f"{date.isoformat()}.csv")
        rk.write_rankings_csv(points, store.date_of, path)
        print(f"rank {date.isoformat()} [{opts['method']}]: {len(points)} points -> {path}")
        date += dt.timedelta(days=1)
    return 0


def cmd_evaluate(opts: dict) -> int:
    from .evaluate import compare_methods, format_table, write_metrics_csv

    store = _open_store(opts["store"])
    labels = load_labels_csv(opts["labels"], store.day_of)
    methods = _split_csv(opts["methods"])
    unknown = [m for m in methods if m not in rk.METHODS]
    if unknown:
        raise ConfigError(f"unknown method(s) {unknown}")
    detector_objs = [_make_detector({**opts, "detector": name}) for name in _split_csv(opts["detectors"])]
    day_lo = store.day_of(opts["from_date"])
    day_hi = store.day_of(opts["to_date"])
    if day_hi < day_lo:
        raise ConfigError("--to-date precedes --from-date")
    cfg = rk.RankingConfig(
        regime_halfwidth=opts["delta"], threshold_quantile=opts["threshold_quantile"]
    )
    reports = compare_methods(
        store,
        store.hierarchy,
        detector_objs,
        methods,
        list(range(day_lo, day_hi + 1)),
        labels,
        cfg=cfg,
        timing_runs=opts["timing_runs"],
        parallel=opts["parallel"],
    )
    os.makedirs(opts["out"], exist_ok=True)
    csv_path = os.path.join(opts["out"], "metrics.csv")
    write_metrics_csv(reports, csv_path)
    print(format_table(reports))
    print(f"metrics -> {csv_path}")
    if opts["figures"]:
        from .figures import render_report_figures

        for path in render_report_figures(reports, opts["out"]):
            print(f"figure -> {path}")
    if opts["parallel"]:
        print("note: parallel mode; timings omitted as non-comparable")
    return 0


def cmd_serve(opts: dict) -> int:
    import uvicorn

    from .service import create_app, load_gateway_data

    data = load_gateway_data(opts["store"], opts["rankings"], opts["labels_store"])
    app = create_app(data)
    uvicorn.run(app, host=opts["host"], port=opts["port"], log_level="warning")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "detect": cmd_detect,
    "rank": cmd_rank,
    "evaluate": cmd_evaluate,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        return COMMANDS[args.command](opts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (StreamRankError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
