"""Command-line client.

The CLI is a thin client of the HTTP service: by default it mounts the app
in-process (so files land on the local filesystem), with --server it talks
to a remote instance instead.  Exit codes: 0 success, 1 validation failure,
2 solver failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ossify",
                     description="Scaffold-mediated bone regeneration simulator")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; defaults to an "
                             "in-process instance")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="per-step progress on stderr")
    sub = parser.add_subparsers(dest="command")

    p_validate = sub.add_parser("validate", help="validate a configuration file")
    p_validate.add_argument("config")

    p_mesh = sub.add_parser("mesh", help="generate, validate and export the mesh")
    p_mesh.add_argument("config")
    p_mesh.add_argument("--out", default=None, help="VTK output path")

    p_run = sub.add_parser("run", help="run the full simulation")
    p_run.add_argument("config")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--output-every", type=int, default=None)

    p_picard = sub.add_parser("picard", help="fixed-point contraction diagnostics")
    p_picard.add_argument("config")
    p_picard.add_argument("--window", type=float, required=True,
                          help="iteration window in months")
    p_picard.add_argument("--max-iter", type=int, default=20)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    return parser


def _client(server: str | None):
    if server:
        import httpx
        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service.app import app
    return TestClient(app)


def _read_config(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _post(client, endpoint: str, payload: dict):
    response = client.post(endpoint, json=payload)
    if response.status_code == 400:
        body = response.json()
        for msg in body.get("errors", [body.get("detail", "invalid configuration")]):
            print(f"invalid: {msg}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)
    if response.status_code >= 500:
        detail = response.json().get("detail", "solver failure")
        print(f"solver error: {detail}", file=sys.stderr)
        raise SystemExit(EXIT_SOLVER)
    if response.status_code != 200:
        print(f"error: unexpected status {response.status_code}", file=sys.stderr)
        raise SystemExit(EXIT_SOLVER)
    return response.json()


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return err.code if err.code is not None else EXIT_USAGE
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")

    if args.command == "serve":
        import uvicorn

        from .service.app import app
        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK

    try:
        client = _client(args.server)
        if args.command == "validate":
            body = _post(client, "/validate",
                         {"config_toml": _read_config(args.config)})
            if not body["valid"]:
                for msg in body["errors"]:
                    print(f"invalid: {msg}", file=sys.stderr)
                return EXIT_VALIDATION
            print(f"valid: scenario {body['scenario']!r}")
            return EXIT_OK
        if args.command == "mesh":
            body = _post(client, "/mesh",
                         {"config_toml": _read_config(args.config),
                          "out_path": args.out})
            print(json.dumps(body, indent=2))
            return EXIT_OK if body["valid"] else EXIT_VALIDATION
        if args.command == "run":
            body = _post(client, "/run",
                         {"config_toml": _read_config(args.config),
                          "out_dir": args.out,
                          "output_every": args.output_every})
            print(json.dumps(body, indent=2))
            return EXIT_OK
        if args.command == "picard":
            body = _post(client, "/picard",
                         {"config_toml": _read_config(args.config),
                          "window": args.window,
                          "max_iter": args.max_iter})
            print(json.dumps(body, indent=2))
            return EXIT_OK
    except SystemExit as err:
        return err.code if err.code is not None else EXIT_SOLVER
    return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
