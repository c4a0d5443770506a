"""Command-line client for the kernel-learning service.

Every subcommand posts one JSON request to the HTTP API. By default the app
runs in-process over an ASGI transport so no server is needed; pass
--server-url (or set MKL_SERVER_URL) to talk to a remote instance instead.

Exit codes: 0 success, 1 usage or config error, 2 rejected input data,
3 solver failed to converge.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import io
import json
import os
import sys

import httpx

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NONCONVERGED = 3

THEORY_KINDS = ("concentration", "perturbation", "predictor", "stability", "genbound")

# which CSV columns to emit per endpoint, keyed by the rows' location
_CSV_LAYOUTS = {
    "cv": ("fold_results", ["fold", "test_error", "validation_error", "train_alignment"]),
    "correlate": (
        "rows",
        ["index", "kernel", "accuracy", "centered_alignment", "uncentered_alignment"],
    ),
    "theory/concentration": (
        "rows",
        [
            "m",
            "bound",
            "coverage",
            "median_abs_error",
            "mean_abs_error",
            "max_abs_error",
            "bias_abs_error",
            "bias_bound",
            "redraws",
        ],
    ),
    "curve": ("points", ["alpha", "centered", "uncentered"]),
}


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; reserve 2 for data
    rejections and use 1 for anything wrong with the invocation itself."""

    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(parser, csv_allowed=False):
    parser.add_argument("--config", required=True, help="path to a JSON request body")
    parser.add_argument("--out", help="write the JSON report here instead of stdout")
    parser.add_argument("--seed", type=int, help="override the seed in the config")
    parser.add_argument(
        "--threads",
        type=int,
        help="worker threads for cross-validation (default: MKL_THREADS or 1)",
    )
    parser.add_argument(
        "--server-url",
        help="base URL of a running service (default: MKL_SERVER_URL or in-process)",
    )
    if csv_allowed:
        parser.add_argument("--csv", help="also write the row table as CSV here")


def build_parser() -> _Parser:
    parser = _Parser(prog="mklalign", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("weights", help="mixture weights on a full dataset"))
    _add_common(sub.add_parser("cv", help="cross-validated error and alignment"), True)
    _add_common(
        sub.add_parser("correlate", help="per-kernel accuracy vs alignment"), True
    )

    theory = sub.add_parser("theory", help="Monte-Carlo checks of the guarantees")
    tsub = theory.add_subparsers(dest="theory_kind", required=True)
    for kind in THEORY_KINDS:
        _add_common(tsub.add_parser(kind), csv_allowed=(kind == "concentration"))

    _add_common(sub.add_parser("ttest", help="paired one-sided error comparison"))
    _add_common(sub.add_parser("curve", help="population alignment curve"), True)

    serve = sub.add_parser("serve", help="run the HTTP service with uvicorn")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise SystemExit(f"mklalign: cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SystemExit(f"mklalign: config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise SystemExit("mklalign: config must be a JSON object")
    return cfg


def _apply_overrides(endpoint: str, cfg: dict, args) -> dict:
    cfg = dict(cfg)
    if args.seed is not None:
        if endpoint == "weights":
            cfg.setdefault("dataset", {}).setdefault("source", {})["seed"] = args.seed
        elif endpoint not in ("theory/genbound", "ttest", "curve"):
            cfg["seed"] = args.seed
    threads = args.threads
    if threads is None and os.environ.get("MKL_THREADS"):
        try:
            threads = int(os.environ["MKL_THREADS"])
        except ValueError as exc:
            raise SystemExit(f"mklalign: MKL_THREADS must be an integer: {exc}") from exc
    if threads is not None and endpoint == "cv":
        cfg["threads"] = threads
    return cfg


async def _post_async(endpoint: str, payload: dict, server_url: str | None):
    if server_url:
        client = httpx.AsyncClient(base_url=server_url, timeout=300.0)
    else:
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())
        client = httpx.AsyncClient(transport=transport, base_url="http://service")
    async with client:
        response = await client.post(f"/{endpoint}", json=payload)
    return response.status_code, response.json()


def _write_json(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_csv(endpoint: str, report: dict, path: str) -> None:
    rows_key, columns = _CSV_LAYOUTS[endpoint]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in report.get(rows_key, []):
        writer.writerow([row.get(c, "") for c in columns])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _dispatch(endpoint: str, args) -> int:
    cfg = _apply_overrides(endpoint, _load_config(args.config), args)
    server_url = args.server_url or os.environ.get("MKL_SERVER_URL")
    try:
        status, body = asyncio.run(_post_async(endpoint, cfg, server_url))
    except httpx.HTTPError as exc:
        print(f"mklalign: request failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if status == 200:
        _write_json(body, args.out)
        if getattr(args, "csv", None):
            _write_csv(endpoint, body, args.csv)
        return EXIT_OK

    error = body.get("error") if isinstance(body, dict) else None
    if error:
        print(f"mklalign: {error.get('kind')}: {error.get('message')}", file=sys.stderr)
        if status == 409 or error.get("kind") == "nonconverged":
            return EXIT_NONCONVERGED
        return EXIT_DATA
    # schema rejection or unexpected server response: an invocation problem
    print(f"mklalign: request rejected (HTTP {status}): {body}", file=sys.stderr)
    return EXIT_CONFIG


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK
    if args.command == "theory":
        endpoint = f"theory/{args.theory_kind}"
    else:
        endpoint = args.command
    try:
        return _dispatch(endpoint, args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return EXIT_CONFIG
        return exc.code if exc.code is not None else EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
