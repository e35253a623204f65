"""Command-line entry point: REPL by default, script mode, or server mode."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

from .config import DEFAULT_CONFIG
from .service import Session, run_script, serve


def _read(path: Optional[str]) -> Optional[str]:
    return Path(path).read_text() if path else None


def _print_replies(replies: list[dict]) -> None:
    for rep in replies:
        kind = rep["kind"]
        if kind == "speech":
            print(f"robot: {rep['text']}")
        elif kind == "ack":
            print(f"robot: {rep['text']}")
        elif kind == "reply":
            where = f" (word {rep['pos'] + 1})" if "pos" in rep else ""
            print(f"robot: {rep['text']}{where}")
        elif kind == "status" and rep["text"] != "done":
            print(f"[{rep['text']}]")


def _repl(session: Session) -> int:
    print("type utterances; ctrl-d to leave")
    while True:
        try:
            line = input(f"{session.user}> ").strip()
        except EOFError:
            print()
            return 0
        except KeyboardInterrupt:
            print()
            return 0
        if not line:
            continue
        _print_replies(session.repl_turn(line))


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sayso",
        description="Teach a simulated forklift robot by talking to it.",
    )
    parser.add_argument("--grammar", metavar="FILE", help="grammar definition (default: built-in)")
    parser.add_argument("--kb", metavar="FILE", help="knowledge base to preload (default: built-in)")
    parser.add_argument("--world", metavar="FILE", help="world layout (default: built-in)")
    parser.add_argument("--seed", type=int, default=0, help="selection RNG seed")
    parser.add_argument("--user", default="user", help="default speaker name")
    parser.add_argument("--script", metavar="FILE", help="run a scenario script and report")
    parser.add_argument("--serve", type=int, metavar="PORT", help="serve the wire protocol on this port")
    parser.add_argument("--tick-hz", type=float, default=None, help="tick rate (default: 30)")
    parser.add_argument("--log", metavar="FILE", help="write the event log here on exit")
    args = parser.parse_args(argv)

    config = DEFAULT_CONFIG
    if args.tick_hz is not None:
        config = replace(config, tick_hz=args.tick_hz)
    session = Session(
        grammar_text=_read(args.grammar),
        kb_text=_read(args.kb),
        world_text=_read(args.world),
        config=config,
        seed=args.seed,
        user=args.user,
    )

    status = 0
    try:
        if args.script:
            report = run_script(session, Path(args.script).read_text())
            sys.stdout.write(report.text())
            status = 0 if report.passed else 1
        elif args.serve is not None:
            serve(
                session,
                args.serve,
                tick_hz=args.tick_hz,
                ready=lambda port: print(f"serving ws://127.0.0.1:{port}"),
            )
        else:
            status = _repl(session)
    except KeyboardInterrupt:
        pass
    finally:
        if args.log:
            Path(args.log).write_text(session.engine.log_text())
    return status


if __name__ == "__main__":
    sys.exit(main())
