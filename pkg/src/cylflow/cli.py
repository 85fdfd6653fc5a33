"""Command-line client: one subcommand per scenario, plus `serve`.

Every scenario invocation goes through the service layer: in-process by
default, or posted to a running server with --server.  Flags override
config-file keys.  Exit codes: 0 all checks pass, 1 a check failed,
2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .scenarios import SCENARIOS

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cylflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, description) in sorted(SCENARIOS.items()):
        p = sub.add_parser(name, help=description)
        _add_run_flags(p)
    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", dest="config_path", default=None, help="key = value config file")
    p.add_argument("--out", default=None, help="output directory root")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--tau0", type=float, default=None)
    p.add_argument("--grid-points", dest="grid_points", type=int, default=None)
    p.add_argument("--grid-extent", dest="grid_extent", type=float, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--boundary", choices=["pinned", "neumann"], default=None)
    p.add_argument("--server", default=None, help="POST the run to this base URL instead")


def _request_from_args(args) -> "RunRequest":
    from .service.models import RunRequest

    fields = {}
    if args.config_path:
        cfg = load_config(args.config_path)
        fields = {k: v for k, v in vars(cfg).items() if v is not None}
        fields.pop("scenario", None)
    for key in (
        "n",
        "k",
        "tau0",
        "horizon",
        "grid_points",
        "grid_extent",
        "dt",
        "boundary",
        "seed",
        "out",
    ):
        value = getattr(args, key, None)
        if value is not None:
            fields[key] = value
    return RunRequest(scenario=args.command, **fields)


def _print_manifest(manifest) -> int:
    print(f"scenario: {manifest.scenario}")
    for check in manifest.checks:
        mark = "PASS" if check.passed else "FAIL"
        detail = f" ({check.detail})" if check.detail else ""
        print(f"  [{mark}] {check.name}{detail}")
    print(f"files: {', '.join(sorted(manifest.files)) or 'none'}")
    print(f"wall time: {manifest.wall_time_seconds:.2f} s")
    if manifest.passed:
        print("result: all checks passed")
        return EXIT_OK
    print("result: CHECK FAILURES")
    return EXIT_CHECK_FAILED


def _run_remote(server: str, request) -> int:
    import httpx

    from .service.models import RunManifestModel

    response = httpx.post(
        server.rstrip("/") + "/runs", json=request.model_dump(), timeout=3600.0
    )
    if response.status_code == 422:
        print(f"configuration rejected: {response.json().get('detail')}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    response.raise_for_status()
    return _print_manifest(RunManifestModel(**response.json()))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK
    try:
        request = _request_from_args(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        if args.server:
            return _run_remote(args.server, request)
        from .service.app import execute_run

        return _print_manifest(execute_run(request))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except Exception as exc:  # runtime failure inside a scenario
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
