"""Thin-client CLI for the lattice laboratory service.

Subcommands map one-to-one onto service endpoints.  By default the CLI
drives the FastAPI app in process (no server needed); pass --url to talk
to a remote instance.  Exit codes: 0 success, 2 precondition/configuration
failure, 3 numerical failure.

Environment overrides: any flag can be defaulted via LATTICELAB_<FLAG>,
e.g. LATTICELAB_OUT, LATTICELAB_URL, LATTICELAB_PRESET.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx

from . import io as lio

ENV_PREFIX = "LATTICELAB_"


def _env_default(name: str, fallback=None):
    return os.environ.get(ENV_PREFIX + name.upper(), fallback)


def _client(url: str | None) -> httpx.Client:
    if url:
        return httpx.Client(base_url=url, timeout=None)
    # in-process: drive the ASGI app directly, no server required
    from fastapi.testclient import TestClient

    from .service.app import app

    return TestClient(app, raise_server_exceptions=False)


def _post(client: httpx.Client, path: str, payload: dict) -> tuple[int, dict]:
    resp = client.post(path, json=payload)
    try:
        body = resp.json()
    except Exception:
        body = {"category": "numerical", "message": resp.text}
    if resp.status_code == 200:
        return 0, body
    code = 2 if body.get("category") == "precondition" else 3
    return code, body


def _request_from_args(args, kind: str) -> dict:
    req: dict = {"kind": kind, "out_dir": args.out}
    if args.config:
        sections = lio.parse_config(Path(args.config).read_text())
        from .experiments import config_from_sections

        cfg = config_from_sections(sections)
        cfg.kind = kind if kind != "auto" else cfg.kind
        cfg.out_dir = args.out
        req = {
            "kind": cfg.kind,
            "force": {"kind": cfg.force_kind, "params": list(cfg.force_params) if cfg.force_params else None},
            "driver": {"a": cfg.a, "gamma": cfg.gamma, "eps": cfg.eps,
                       "sin_amps": list(cfg.sin_amps), "cos_amps": list(cfg.cos_amps)},
            "n_particles": cfg.n_particles, "dt": cfg.dt, "t_end": cfg.t_end, "t_lo": cfg.t_lo,
            "snapshot_stride": cfg.snapshot_stride, "window": list(cfg.window), "q_abs": cfg.q_abs,
            "c": cfg.c, "p": list(cfg.p), "z_phase": list(cfg.z_phase),
            "out_dir": cfg.out_dir, "allow_long_run": cfg.allow_long_run,
        }
    else:
        req["force"] = {"kind": args.force, "params": json.loads(args.force_params) if args.force_params else None}
        req["driver"] = {"a": args.a, "gamma": args.gamma, "eps": args.eps,
                         "sin_amps": [1.0], "cos_amps": [0.0, 0.5]}
        req.update({"n_particles": args.n_particles, "dt": args.dt, "t_end": args.t_end,
                    "allow_long_run": args.allow_long_run})
        if args.c is not None:
            req["c"] = args.c
        if args.p:
            req["p"] = json.loads(args.p)
        if args.z_phase:
            req["z_phase"] = json.loads(args.z_phase)
    return req


def _add_common(sp):
    sp.add_argument("--config", default=_env_default("config"), help="INI config file")
    sp.add_argument("--out", default=_env_default("out", "out"), help="output directory")
    sp.add_argument("--preset", default=_env_default("preset"), help="named preset")
    sp.add_argument("--url", default=_env_default("url"), help="remote service URL (default: in-process)")
    sp.add_argument("--force", default="toda", choices=["toda", "linear", "cubic", "rational"])
    sp.add_argument("--force-params", default=None, help="JSON list of force parameters")
    sp.add_argument("--a", type=float, default=0.5)
    sp.add_argument("--gamma", type=float, default=1.8)
    sp.add_argument("--eps", type=float, default=0.2)
    sp.add_argument("--n-particles", type=int, default=400)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--t-end", type=float, default=200.0)
    sp.add_argument("--c", type=float, default=None)
    sp.add_argument("--p", default=None, help="JSON list of gap half-widths")
    sp.add_argument("--z-phase", default=None, help="JSON list of divisor phases")
    sp.add_argument("--allow-long-run", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="latticelab", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in ("simulate", "spectrum", "flux", "density", "wave", "ggap", "predict-gaps"):
        sp = sub.add_parser(kind, help=f"run the {kind} experiment")
        _add_common(sp)
    spv = sub.add_parser("validate", help="run the acceptance suite")
    spv.add_argument("--url", default=_env_default("url"))
    sps = sub.add_parser("serve", help="start the HTTP service")
    sps.add_argument("--host", default="127.0.0.1")
    sps.add_argument("--port", type=int, default=8000)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    if args.command == "validate":
        with _client(args.url) as client:
            code, body = _post(client, "/validate", {})
        if code != 0:
            print(f"error ({body.get('category')}): {body.get('message')}", file=sys.stderr)
            return code
        for line in body["lines"]:
            print(line)
        return 0 if body["passed"] else 3

    with _client(args.url) as client:
        if args.preset:
            code, body = _post(client, "/experiments/preset", {"name": args.preset, "out_dir": args.out})
        else:
            code, body = _post(client, "/experiments/run", _request_from_args(args, args.command))
    if code != 0:
        print(f"error ({body.get('category')}): {body.get('message')}", file=sys.stderr)
        return code
    for f in body["files"]:
        print(f"wrote {f}")
    for k, v in body["summary"].items():
        print(f"{k} = {v}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
