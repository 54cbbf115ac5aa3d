"""Command line front end: load a model directory and serve it."""

from __future__ import annotations

import argparse
import logging
import sys

from .model import SidecarError, TransformerScorer
from .server import serve_stdio, serve_tcp

logger = logging.getLogger("pt_sidecar")


def parse_listen(value: str) -> tuple[str, str, int] | tuple[str]:
    if value == "stdio":
        return ("stdio",)
    if value.startswith("tcp:"):
        rest = value[len("tcp:") :]
        host, separator, port_text = rest.rpartition(":")
        if not separator or not host:
            raise argparse.ArgumentTypeError(
                f"tcp listen address must be tcp:host:port, got {value!r}"
            )
        try:
            port = int(port_text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid port in {value!r}") from None
        if not 0 <= port < 65536:
            raise argparse.ArgumentTypeError(f"port out of range in {value!r}")
        return ("tcp", host, port)
    raise argparse.ArgumentTypeError(
        f"--listen takes 'stdio' or 'tcp:host:port', got {value!r}"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pt-sidecar",
        description="Serve a saved sequence-classification model over "
        "newline-delimited JSON.",
    )
    parser.add_argument(
        "--model", required=True, help="directory holding the saved model and tokenizer"
    )
    parser.add_argument(
        "--listen",
        type=parse_listen,
        default=("stdio",),
        help="stdio (default) or tcp:host:port; port 0 picks a free port",
    )
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-length", type=int, default=None)
    parser.add_argument("--name", default=None, help="override the descriptor name")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        scorer = TransformerScorer(
            args.model,
            device=args.device,
            batch_size=args.batch_size,
            max_length=args.max_length,
        )
    except SidecarError as exc:
        logger.error("%s", exc)
        return 1
    if args.name:
        scorer.name = args.name
    logger.info(
        "serving %r: %d labels", scorer.name, len(scorer.vocabulary)
    )
    try:
        if args.listen[0] == "stdio":
            serve_stdio(scorer)
        else:
            _, host, port = args.listen
            serve_tcp(scorer, host, port)
    except KeyboardInterrupt:
        pass
    return 0


def entry() -> None:
    raise SystemExit(main())
