"""Command-line client for the smerl-lab service.

Without ``--server`` requests go to an in-process instance of the app.

Exit codes: 0 success, 1 validation failure, 2 verification violation,
3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import yaml

EXIT_OK, EXIT_INVALID, EXIT_VIOLATION, EXIT_RUNTIME = 0, 1, 2, 3


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    with warnings.catch_warnings():
        # starlette warns about its httpx transport; harmless for in-process use
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient

    from .service.app import app

    return TestClient(app)


def _read_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config not found: {p}")
    data = yaml.safe_load(p.read_text()) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{p}: top level must be a mapping")
    return data


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smerl-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--server", help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("train", "sweep", "verify"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run config")
        p.add_argument("--seed-override", type=int, help="replace the seed list with this single seed")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--modes", help="comma-separated training modes, e.g. SAC1,SMERL")
        if name == "sweep":
            p.add_argument("--train", action="store_true", help="train first if checkpoints are missing")
    p = sub.add_parser("report", help="re-render tables and plot data from a stored report.json")
    p.add_argument("--report", help="path to report.json (default: <out>/sweep/report.json)")
    p.add_argument("--config", help="config whose output_dir holds the sweep")
    p.add_argument("--out", help="run output directory")
    return parser


def _status_to_exit(code: int) -> int:
    if code == 422:
        return EXIT_INVALID
    return EXIT_RUNTIME


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            out = args.out
            if out is None and args.config:
                out = _read_config(args.config).get("output_dir")
            path = args.report or str(Path(out or "runs") / "sweep" / "report.json")
            endpoint, payload = "/report", {"report": path, "out": str(Path(path).parent)}
        else:
            payload = {"config": _read_config(args.config), "out": args.out, "seed_override": args.seed_override,
                       "modes": [m.strip() for m in args.modes.split(",")] if args.modes else None}
            if args.command == "sweep":
                payload["train_inline"] = args.train
            endpoint = f"/{args.command}"
    except (FileNotFoundError, ValueError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    try:
        with _client(args.server) as client:
            resp = client.post(endpoint, json=payload)
    except Exception as exc:
        print(f"error: request failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    body = resp.json()
    if resp.status_code != 200:
        for line in body.get("errors", [str(body)]):
            print(f"error: {line}", file=sys.stderr)
        return _status_to_exit(resp.status_code)
    print(json.dumps(body, indent=2, sort_keys=True))
    if args.command == "verify" and body.get("violations", 0) > 0:
        return EXIT_VIOLATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
