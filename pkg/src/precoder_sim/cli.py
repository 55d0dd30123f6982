"""Command-line client for the simulator service.

Subcommands run against an in-process service instance by default; pass
--server to target a remote one instead (paths are then resolved on the
server's filesystem). Exit codes: 0 pass, 1 scenario failed, 2 error.
"""

from __future__ import annotations

import argparse
import sys
import warnings

import httpx


def _client(server: str | None) -> httpx.Client:
    if server is not None:
        return httpx.Client(base_url=server, timeout=600.0)
    with warnings.catch_warnings():
        # starlette flags its bundled httpx TestClient shim; scoped to the import
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

        from .service import app

        return TestClient(app)


def _post(args: argparse.Namespace, endpoint: str, payload: dict) -> dict:
    with _client(args.server) as client:
        response = client.post(endpoint, json=payload)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(2)
    return response.json()


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config-override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a manifest/config key (repeatable)",
    )
    parser.add_argument(
        "--server",
        default=None,
        metavar="URL",
        help="base URL of a running service; default is in-process",
    )


def _cmd_run(args: argparse.Namespace) -> int:
    data = _post(args, "/run", {
        "manifest_path": args.manifest,
        "overrides": args.config_override,
    })
    print(data["report_text"], end="")
    return 0 if data["passed"] else 1


def _cmd_verify(args: argparse.Namespace) -> int:
    data = _post(args, "/verify", {
        "manifest_path": args.manifest,
        "overrides": args.config_override,
    })
    print(data["report_text"], end="")
    return 0 if data["passed"] else 1


def _cmd_gen(args: argparse.Namespace) -> int:
    data = _post(args, "/generate", {
        "out_dir": args.out,
        "seed": args.seed,
        "users": args.users,
        "pattern": args.pattern,
        "slots": args.slots,
        "overrides": args.config_override,
    })
    print(f"manifest={data['manifest_path']} frames={data['num_frames']}")
    return 0


def _cmd_timing(args: argparse.Namespace) -> int:
    payload: dict = {"overrides": args.config_override}
    if args.config is not None:
        payload["config_path"] = args.config
    else:
        payload["config_text"] = ""
    data = _post(args, "/timing", payload)
    print(data["text"], end="")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("precoder_sim.service:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="precoder-sim",
        description="massive-MIMO precoder datapath simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario manifest against the golden model")
    p_run.add_argument("manifest", help="path to a manifest file")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_gen = sub.add_parser("gen", help="generate packet frame files and a manifest")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--users", type=int, required=True)
    p_gen.add_argument("--pattern", choices=("contiguous", "alternating", "random"),
                       default="contiguous")
    p_gen.add_argument("--slots", type=int, default=1)
    p_gen.add_argument("--out", required=True, metavar="DIR")
    _add_common(p_gen)
    p_gen.set_defaults(func=_cmd_gen)

    p_verify = sub.add_parser("verify", help="run plus double-precision cross-check")
    p_verify.add_argument("manifest")
    _add_common(p_verify)
    p_verify.set_defaults(func=_cmd_verify)

    p_timing = sub.add_parser("timing", help="analytic worst-case latency report")
    p_timing.add_argument("--config", default=None, metavar="CFG",
                          help="config file; defaults apply when omitted")
    _add_common(p_timing)
    p_timing.set_defaults(func=_cmd_timing)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
