"""Command line interface: extract, synth, eval, serve.

Diagnostics go to standard error; data goes to files, so pipelines stay
scriptable.
"""

import argparse
import json
import logging
import sys

from .config import PipelineConfig, ConfigError


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="crashsynth",
        description="Dashcam perception to simulator-ready crash scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="run the extraction pipeline on input directories")
    p.add_argument("--input", required=True, action="append",
                   help="scene directory with detections.jsonl, depth/, ...; "
                        "repeat for a batch (scenes run in a worker pool)")
    p.add_argument("--config", help="TOML config file (defaults to <input>/config.toml if present)")
    p.add_argument("--output", required=True,
                   help="scenario JSON path (single scene) or output directory (batch)")

    p = sub.add_parser("synth", help="render a synthetic scene script into pipeline inputs")
    p.add_argument("--script", required=True, help="scene script JSON")
    p.add_argument("--output", required=True, help="output input-directory")

    p = sub.add_parser("eval", help="CLEAR-MOT evaluation of estimated vs ground-truth tracks")
    p.add_argument("--gt", required=True, help="ground truth CSV (frame,object_id,x,y)")
    p.add_argument("--est", required=True, help="estimate CSV (frame,object_id,x,y)")
    p.add_argument("--threshold", type=float, default=3.0, help="match gate in meters")
    p.add_argument("--output", required=True, help="report path (.txt; a .json sibling is written)")

    p = sub.add_parser("serve", help="serve the scenario editor")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--static", help="directory of editor assets to serve at /")
    p.add_argument("--min-gap", type=float, default=6.0, help="overlap check distance")

    return parser


def _cmd_extract(args):
    import os

    from .pipeline import run_pipeline, run_scenes, MissingInputError

    config_path = args.config
    if config_path is None and len(args.input) == 1:
        candidate = os.path.join(args.input[0], "config.toml")
        config_path = candidate if os.path.isfile(candidate) else None
    try:
        # batch mode with no --config: each scene falls back to its own file
        config = PipelineConfig.from_file(config_path) if config_path else \
            (PipelineConfig() if len(args.input) == 1 else None)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if len(args.input) == 1:
        try:
            spec, diag = run_pipeline(args.input[0], config, args.output)
        except (MissingInputError, ConfigError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(diag.render(), file=sys.stderr, end="")
        print(f"scenario written to {args.output} "
              f"({len(spec.vehicles)} vehicles, road {spec.road.length:.1f} m)",
              file=sys.stderr)
        return 0

    results = run_scenes(args.input, config, args.output)
    failed = 0
    for scene, result in results.items():
        if isinstance(result, Exception):
            failed += 1
            print(f"error: {scene}: {result}", file=sys.stderr)
        else:
            spec, _ = result
            print(f"{scene}: {len(spec.vehicles)} vehicles", file=sys.stderr)
    return 1 if failed else 0


def _cmd_synth(args):
    from .synthetic import generate_synthetic, ScriptError

    try:
        summary = generate_synthetic(args.script, args.output)
    except (ScriptError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"synthetic scene with {summary['frame_count']} frames written to "
          f"{summary['output_dir']}", file=sys.stderr)
    return 0


def _cmd_eval(args):
    from . import io_formats
    from .metrics import evaluate, UndefinedMetricsError

    try:
        gt = io_formats.read_tracks_csv(args.gt)
        est = io_formats.read_tracks_csv(args.est)
        report = evaluate(gt, est, args.threshold)
    except (OSError, io_formats.FormatError, UndefinedMetricsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = report.to_text()
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(text)
    json_path = args.output.rsplit(".", 1)[0] + ".json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(text, file=sys.stderr, end="")
    return 0


def _cmd_serve(args):
    from .scenario import ScenarioValidationError
    from .server import serve_editor

    try:
        server = serve_editor(args.scenario, args.port, args.static, args.min_gap)
    except (OSError, ScenarioValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    host, port = server.server_address
    print(f"serving editor on http://{host}:{port} - Ctrl-C to stop", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    handlers = {
        "extract": _cmd_extract,
        "synth": _cmd_synth,
        "eval": _cmd_eval,
        "serve": _cmd_serve,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
