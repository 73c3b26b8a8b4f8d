"""Command line entry points.

`serve` hosts the HTTP/WebSocket service; `suggest` runs one suggestion
round in-process over local files and prints the round as JSON, which keeps
offline runs free of any network hop.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

from .errors import ChartScoutError
from .gateway import BackendConfig
from .pipeline import run_offline
from .session import (
    DEFAULT_CANDIDATE_COUNT,
    DEFAULT_DEADLINE_MS,
    DEFAULT_PARALLELISM,
    DEFAULT_WINDOW_SIZE,
    SessionConfig,
)


def _add_backend_args(parser: argparse.ArgumentParser, default_kind: str) -> None:
    parser.add_argument(
        "--backend",
        choices=("live", "replay", "simulated"),
        default=default_kind,
        help="completion source (default: %(default)s)",
    )
    parser.add_argument("--replay-dir", default=None, help="fixture directory for replay")
    parser.add_argument(
        "--delay-ms", type=float, default=500.0, help="per-call latency of the simulated backend"
    )
    parser.add_argument("--base-url", default="https://api.openai.com/v1")
    parser.add_argument("--model", default="gpt-4o")
    parser.add_argument("--api-key-env", default="OPENAI_API_KEY")


def _add_round_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--candidates", type=int, default=DEFAULT_CANDIDATE_COUNT)
    parser.add_argument("--deadline-ms", type=int, default=DEFAULT_DEADLINE_MS)
    parser.add_argument("--parallelism", type=int, default=DEFAULT_PARALLELISM)
    parser.add_argument("--window", type=int, default=DEFAULT_WINDOW_SIZE)


def _backend_config(args: argparse.Namespace) -> BackendConfig:
    return BackendConfig(
        kind=args.backend,
        base_url=args.base_url,
        model=args.model,
        api_key_env=args.api_key_env,
        replay_dir=args.replay_dir,
        per_call_delay_ms=args.delay_ms,
    )


def _session_config(args: argparse.Namespace) -> SessionConfig:
    return SessionConfig(
        candidate_count=args.candidates,
        window_size=args.window,
        deadline_ms=args.deadline_ms,
        parallelism=args.parallelism,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chartscout",
        description="context-aware chart suggestions for live data presentations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP/WebSocket service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8040)
    serve.add_argument("--data-dir", required=True, help="directory of CSV/JSON datasets")
    serve.add_argument("--log-dir", default=None, help="write per-session JSONL event logs here")
    _add_backend_args(serve, default_kind="live")
    _add_round_args(serve)

    suggest = sub.add_parser("suggest", help="run one round offline and print it")
    suggest.add_argument("--data-dir", required=True)
    suggest.add_argument("--transcript", default=None, help='text file of "speaker: text" lines')
    suggest.add_argument("--chart", default=None, help="JSON file {datasetId, title, spec}")
    suggest.add_argument("--profile", default=None, help="JSON file with the audience profile")
    suggest.add_argument("--compact", action="store_true", help="print without indentation")
    _add_backend_args(suggest, default_kind="replay")
    _add_round_args(suggest)

    return parser


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        data_dir=args.data_dir,
        backend=_backend_config(args),
        log_dir=args.log_dir,
        session_defaults=_session_config(args),
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_suggest(args: argparse.Namespace) -> int:
    result = asyncio.run(
        run_offline(
            data_dir=args.data_dir,
            backend_config=_backend_config(args),
            transcript_path=args.transcript,
            chart_path=args.chart,
            profile_path=args.profile,
            config=_session_config(args),
        )
    )
    document = result.to_json()
    if args.compact:
        print(json.dumps(document, separators=(",", ":")))
    else:
        print(json.dumps(document, indent=2))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return cmd_serve(args)
        return cmd_suggest(args)
    except ChartScoutError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
