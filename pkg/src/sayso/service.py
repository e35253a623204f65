"""User-facing surface: REPL sessions, scenario scripts, and the wire server.

A Session wraps one engine with conversation semantics: teaching
utterances mutate the knowledge base and are acknowledged immediately,
commands and facts post a focus and tick until it settles or a budget
runs out. Scripts replay the same pipeline from a file with
expectations checked against the event log. The server shares the
pipeline too; network reader threads only enqueue, and a single loop
owns every engine access.
"""

from __future__ import annotations

import importlib.resources as res
import json
import math
import queue
import random
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .config import DEFAULT_CONFIG, EngineConfig
from .interp import DONE, FAILED, RUNNING, Engine
from .kernel import parse_world
from .lang import Grammar
from .lang.compiler import CompileError
from .lang.kbtext import load_kb, save_kb
from .lang.parser import ParseError
from .semnet import Level
from .ws import WSConnection, WSListener

PROTOCOL_VERSION = 1

_ASSETS = res.files("sayso") / "assets"


def asset_text(name: str) -> str:
    return (_ASSETS / name).read_text()


# ---------------------------------------------------------------------------
# session


class Session:
    """One engine plus conversation state. Rebuildable from its sources."""

    def __init__(
        self,
        grammar_text: Optional[str] = None,
        kb_text: Optional[str] = None,
        world_text: Optional[str] = None,
        config: EngineConfig = DEFAULT_CONFIG,
        seed: int = 0,
        user: str = "user",
    ):
        self.grammar_text = grammar_text if grammar_text is not None else asset_text("core.gram")
        self.kb_text = kb_text if kb_text is not None else asset_text("core.kb")
        self.world_text = world_text if world_text is not None else asset_text("default.world")
        self.config = config
        self.seed = seed
        self.user = user
        self.transcript: list[dict] = []  # append-only
        self.speakers: list[str] = [user]
        self.engine = self._build()

    def _build(self) -> Engine:
        grammar = Grammar.load(self.grammar_text)
        world = parse_world(self.world_text)
        engine = Engine(grammar, world, config=self.config, seed=self.seed, user=self.user)
        ops, rules = load_kb(self.kb_text)
        engine.load_kb(ops, rules)
        return engine

    def reset(self) -> None:
        """Fresh engine from the original sources; transcript is kept."""
        self.engine = self._build()

    def set_seed(self, seed: int) -> None:
        """Reseat the selection RNG now and for any later reset."""
        self.seed = seed
        self.engine.seed = seed
        self.engine.rng = random.Random(seed)

    def save_kb(self) -> str:
        """Current knowledge base, built-ins and taught entries alike."""
        return save_kb(list(self.engine.ops), self.engine.rules)

    # -- the conversational pipeline -----------------------------------------

    def submit(self, line: str, speaker: Optional[str] = None) -> list[dict]:
        """Parse one utterance and apply it; no ticking.

        Teachings mutate the KB and return an "okay" ack. Commands and
        facts post a focus (reported as a pending status). Utterances
        outside the grammar return the fixed failure reply with the
        token position that broke the parse.
        """
        speaker = speaker or self.user
        if speaker not in self.speakers:
            self.speakers.append(speaker)
        self.transcript.append({"who": speaker, "text": line})
        try:
            heard = self.engine.hear(line, speaker=speaker)
        except ParseError as err:
            reply = {"kind": "reply", "text": "I don't understand", "pos": err.pos}
            self.transcript.append({"who": "robot", "text": reply["text"]})
            return [reply]
        except CompileError:
            reply = {"kind": "reply", "text": "I don't understand"}
            self.transcript.append({"who": "robot", "text": reply["text"]})
            return [reply]
        if heard.focus is None:
            reply = {"kind": "ack", "text": "okay", "what": heard.kind, "name": heard.name}
            self.transcript.append({"who": "robot", "text": "okay"})
            return [reply]
        return [{"kind": "posted", "focus": heard.focus.fid, "what": heard.kind}]

    def repl_turn(self, line: str, speaker: Optional[str] = None) -> list[dict]:
        """One typed line in, reply records out.

        After posting a command or fact the engine ticks until that
        focus settles or the per-turn budget expires; robot speech from
        those ticks comes back as reply records alongside the final
        status (done, failed, or still working).
        """
        mark = len(self.engine.events)
        replies = self.submit(line, speaker)
        if not replies or replies[-1]["kind"] != "posted":
            return replies
        posted = replies.pop()
        focus = next(f for f in self.engine.foci if f.fid == posted["focus"])
        for _ in range(self.config.repl_tick_budget):
            if focus.status is not RUNNING:
                break
            self.engine.step()
        for record in self.engine.events[mark:]:
            rec = json.loads(record)
            if "speech" in rec:
                replies.append({"kind": "speech", "text": rec["speech"]})
                self.transcript.append({"who": "robot", "text": rec["speech"]})
        text = "still working" if focus.status is RUNNING else focus.status.lower()
        replies.append({"kind": "status", "text": text, "focus": focus.fid})
        return replies


# ---------------------------------------------------------------------------
# scenario scripts


class ScriptError(ValueError):
    """Malformed script file."""


@dataclass
class ScriptEntry:
    lineno: int
    kind: str  # say | wait | place | expect-speech | expect-fail | expect-pose
    args: dict = field(default_factory=dict)


@dataclass
class CheckResult:
    lineno: int
    kind: str
    ok: bool
    detail: str = ""


@dataclass
class ScriptReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def text(self) -> str:
        lines = []
        for c in self.checks:
            mark = "PASS" if c.ok else "FAIL"
            suffix = f"  {c.detail}" if c.detail and not c.ok else ""
            lines.append(f"line {c.lineno:>3}  {c.kind:<14} {mark}{suffix}")
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{len(self.checks)} checks: {verdict}")
        return "\n".join(lines) + "\n"


_SPEAKER_LINE = re.compile(r"^([A-Za-z][\w-]*):\s+(.+)$")
_QUOTED = re.compile(r'^"(.*)"$')


def parse_script(text: str) -> list[ScriptEntry]:
    """Script format, one entry per line.

    Utterances are plain lines, optionally prefixed `speaker: `.
    Control lines: `@wait N`, `@place name x y [radius] [fixed]`,
    `@expect-speech "..."`, `@expect-fail`, `@expect-pose x y theta tol`.
    Blank lines and full-line # comments are skipped.
    """
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not line.startswith("@"):
            m = _SPEAKER_LINE.match(line)
            if m:
                entries.append(ScriptEntry(lineno, "say", {"speaker": m.group(1), "text": m.group(2)}))
            else:
                entries.append(ScriptEntry(lineno, "say", {"speaker": None, "text": line}))
            continue
        parts = line.split()
        word = parts[0]
        try:
            if word == "@wait" and len(parts) == 2:
                entries.append(ScriptEntry(lineno, "wait", {"ticks": int(parts[1])}))
            elif word == "@place" and 4 <= len(parts) <= 6:
                fixed = parts[-1] == "fixed"
                nums = parts[3 : len(parts) - (1 if fixed else 0)]
                radius = float(nums[1]) if len(nums) > 1 else 0.02
                entries.append(
                    ScriptEntry(
                        lineno,
                        "place",
                        {
                            "name": parts[1],
                            "x": float(parts[2]),
                            "y": float(nums[0]),
                            "radius": radius,
                            "graspable": not fixed,
                        },
                    )
                )
            elif word == "@expect-speech":
                m = _QUOTED.match(line[len(word) :].strip())
                if not m:
                    raise ScriptError(f"line {lineno}: expect-speech needs a double-quoted string")
                entries.append(ScriptEntry(lineno, "expect-speech", {"text": m.group(1)}))
            elif word == "@expect-fail" and len(parts) == 1:
                entries.append(ScriptEntry(lineno, "expect-fail"))
            elif word == "@expect-pose" and len(parts) == 5:
                x, y, theta, tol = map(float, parts[1:])
                entries.append(ScriptEntry(lineno, "expect-pose", {"x": x, "y": y, "theta": theta, "tol": tol}))
            else:
                raise ScriptError(f"line {lineno}: bad control line {line!r}")
        except ValueError as err:
            if isinstance(err, ScriptError):
                raise
            raise ScriptError(f"line {lineno}: {err}") from None
    return entries


def _wrap_angle(theta: float) -> float:
    while theta > math.pi:
        theta -= 2.0 * math.pi
    while theta < -math.pi:
        theta += 2.0 * math.pi
    return theta


def run_script(session: Session, text: str) -> ScriptReport:
    """Execute a script; expectations check the event log and pose.

    Speech expectations consume matching speech events in order, so a
    script can assert the same sentence twice and require two
    occurrences. expect-fail reads the status of the latest utterance
    turn; expect-pose reads the kernel snapshot at that point.
    """
    entries = parse_script(text)
    report = ScriptReport()
    engine = session.engine
    consumed = 0  # speech events already matched by an expectation
    last_status: Optional[str] = None

    for entry in entries:
        if entry.kind == "say":
            replies = session.repl_turn(entry.args["text"], speaker=entry.args["speaker"])
            last_status = None
            for rep in replies:
                if rep["kind"] == "status":
                    last_status = rep["text"]
                elif rep["kind"] == "reply":
                    last_status = "not understood"
        elif entry.kind == "wait":
            for _ in range(entry.args["ticks"]):
                engine.step()
        elif entry.kind == "place":
            a = entry.args
            engine.kernel.place_object(a["name"], a["x"], a["y"], a["radius"], a["graspable"])
        elif entry.kind == "expect-speech":
            speeches = engine.speech_texts()
            want = entry.args["text"]
            found = None
            for i in range(consumed, len(speeches)):
                if speeches[i] == want:
                    found = i
                    break
            if found is None:
                recent = speeches[consumed:][-3:]
                report.checks.append(
                    CheckResult(entry.lineno, entry.kind, False, f"no speech {want!r}; saw {recent}")
                )
            else:
                consumed = found + 1
                report.checks.append(CheckResult(entry.lineno, entry.kind, True))
        elif entry.kind == "expect-fail":
            ok = last_status == "failed"
            detail = "" if ok else f"last turn ended {last_status!r}"
            report.checks.append(CheckResult(entry.lineno, entry.kind, ok, detail))
        elif entry.kind == "expect-pose":
            a = entry.args
            snap = engine.snapshot()
            dx = abs(snap["x"] - a["x"])
            dy = abs(snap["y"] - a["y"])
            dth = abs(_wrap_angle(snap["heading"] - a["theta"]))
            ok = dx <= a["tol"] and dy <= a["tol"] and dth <= a["tol"]
            detail = "" if ok else (
                f"at ({snap['x']:.6f}, {snap['y']:.6f}, {snap['heading']:.6f}), "
                f"off by ({dx:.2e}, {dy:.2e}, {dth:.2e})"
            )
            report.checks.append(CheckResult(entry.lineno, entry.kind, ok, detail))
    return report


# ---------------------------------------------------------------------------
# wire server


def _frame(type_: str, **fields) -> str:
    rec = {"v": PROTOCOL_VERSION, "type": type_}
    rec.update(fields)
    return json.dumps(rec, separators=(",", ":"))


class _Hub:
    """Connection registry; broadcast fan-out with dead-peer pruning."""

    def __init__(self) -> None:
        self.conns: list[WSConnection] = []
        self.lock = threading.Lock()

    def add(self, conn: WSConnection) -> None:
        with self.lock:
            self.conns.append(conn)

    def drop(self, conn: WSConnection) -> None:
        with self.lock:
            if conn in self.conns:
                self.conns.remove(conn)
        conn.close()

    def send(self, conn: WSConnection, text: str) -> None:
        try:
            conn.send_text(text)
        except OSError:
            self.drop(conn)

    def broadcast(self, text: str) -> None:
        with self.lock:
            targets = list(self.conns)
        for conn in targets:
            self.send(conn, text)

    def close_all(self) -> None:
        with self.lock:
            targets, self.conns = self.conns, []
        for conn in targets:
            conn.close()


class Server:
    """Wire-protocol server around one session.

    Reader threads enqueue inbound messages; run() owns the engine,
    applies commands, ticks at the configured rate, and broadcasts
    state, events, speech, memory dumps, and KB listings to every
    connected client.
    """

    def __init__(
        self,
        session: Session,
        listener: WSListener,
        tick_hz: Optional[float] = None,
        stop: Optional[threading.Event] = None,
    ):
        self.session = session
        self.listener = listener
        self.tick_hz = tick_hz if tick_hz is not None else session.config.tick_hz
        self.stop = stop if stop is not None else threading.Event()
        self.hub = _Hub()
        self.inbox: "queue.Queue[tuple[str, WSConnection, Optional[str]]]" = queue.Queue()
        self.paused = False
        self._event_cursor = 0
        self._last_memory = ""
        self._last_kb = ""
        self._last_world = ""

    # -- network side ---------------------------------------------------------

    def _acceptor(self) -> None:
        while not self.stop.is_set():
            try:
                conn = self.listener.accept()
            except OSError:
                return  # listener closed
            self.hub.add(conn)
            self.inbox.put(("join", conn, None))
            threading.Thread(target=self._reader, args=(conn,), daemon=True).start()

    def _reader(self, conn: WSConnection) -> None:
        while True:
            try:
                text = conn.recv_text()
            except OSError:
                text = None
            if text is None:
                self.inbox.put(("drop", conn, None))
                return
            self.inbox.put(("msg", conn, text))

    # -- engine side ------------------------------------------------------------

    def _snapshot_frame(self) -> str:
        return _frame("state", **self.session.engine.snapshot())

    def _world_frame(self) -> str:
        world = self.session.engine.kernel.world
        return _frame(
            "world",
            bounds=[world.xmin, world.ymin, world.xmax, world.ymax],
            obstacles=[{"x": o.x, "y": o.y, "radius": o.radius} for o in world.obstacles],
            objects=[
                {
                    "name": o.name,
                    "x": o.x,
                    "y": o.y,
                    "radius": o.radius,
                    "graspable": o.graspable,
                    "held": o.held,
                }
                for o in world.objects
            ],
        )

    def _memory_frame(self) -> str:
        memory = self.session.engine.memory
        return _frame(
            "memory",
            attention=memory.dump_records([Level.ATTENTION]),
            working=memory.dump_records([Level.WORKING]),
            halo=memory.dump_records([Level.HALO]),
        )

    def _kb_frame(self) -> str:
        return _frame("kb", text=self.session.save_kb())

    def _greet(self, conn: WSConnection) -> None:
        self.hub.send(
            conn,
            _frame("hello", speakers=list(self.session.speakers), tick_hz=self.tick_hz, user=self.session.user),
        )
        self.hub.send(conn, self._snapshot_frame())
        self.hub.send(conn, self._world_frame())
        self.hub.send(conn, self._kb_frame())
        self.hub.send(conn, self._memory_frame())

    def _flush_changes(self) -> None:
        """Broadcast engine events, speech, and changed dumps."""
        engine = self.session.engine
        events = engine.events
        while self._event_cursor < len(events):
            record = json.loads(events[self._event_cursor])
            self._event_cursor += 1
            self.hub.broadcast(_frame("event", record=record))
            if "speech" in record:
                self.hub.broadcast(_frame("speech", text=record["speech"], tick=record["tick"]))
        world = self._world_frame()
        if world != self._last_world:
            self._last_world = world
            self.hub.broadcast(world)
        memory = self._memory_frame()
        if memory != self._last_memory:
            self._last_memory = memory
            self.hub.broadcast(memory)
        kb = self._kb_frame()
        if kb != self._last_kb:
            self._last_kb = kb
            self.hub.broadcast(kb)

    def _handle(self, conn: WSConnection, text: str) -> None:
        try:
            msg = json.loads(text)
            if not isinstance(msg, dict) or "type" not in msg:
                raise ValueError("message must be an object with a type")
            if msg.get("v", PROTOCOL_VERSION) != PROTOCOL_VERSION:
                raise ValueError(f"unsupported protocol version {msg['v']!r}")
        except ValueError as err:
            self.hub.send(conn, _frame("error", text=f"bad message: {err}"))
            return
        kind = msg["type"]
        try:
            if kind == "utterance":
                replies = self.session.submit(str(msg["text"]), speaker=msg.get("speaker"))
                for rep in replies:
                    self.hub.broadcast(_frame("reply", **rep))
            elif kind == "reset":
                self.session.reset()
                self._event_cursor = 0
                self.hub.broadcast(self._snapshot_frame())
            elif kind == "set-seed":
                self.session.set_seed(int(msg["seed"]))
            elif kind == "pause":
                self.paused = True
            elif kind == "resume":
                self.paused = False
            elif kind == "place-object":
                self.session.engine.kernel.place_object(
                    str(msg["name"]),
                    float(msg["x"]),
                    float(msg["y"]),
                    float(msg.get("radius", 0.02)),
                    bool(msg.get("graspable", True)),
                )
                self.hub.broadcast(self._snapshot_frame())
            elif kind == "dump":
                self.hub.send(conn, self._memory_frame())
                self.hub.send(conn, self._kb_frame())
            else:
                self.hub.send(conn, _frame("error", text=f"unknown message type {kind!r}"))
                return
        except (KeyError, TypeError, ValueError) as err:
            self.hub.send(conn, _frame("error", text=f"bad {kind} message: {err}"))
            return
        self._flush_changes()

    def run(self, max_ticks: Optional[int] = None) -> None:
        """Serve until stopped; all engine access happens on this thread."""
        threading.Thread(target=self._acceptor, daemon=True).start()
        period = 1.0 / self.tick_hz if self.tick_hz > 0 else 0.0
        next_due = time.monotonic() + period
        ticked = 0
        try:
            while not self.stop.is_set():
                if max_ticks is not None and ticked >= max_ticks:
                    break
                timeout = max(0.0, next_due - time.monotonic()) if not self.paused else 0.05
                try:
                    op, conn, text = self.inbox.get(timeout=timeout)
                    if op == "join":
                        self._greet(conn)
                    elif op == "drop":
                        self.hub.drop(conn)
                    elif op == "msg":
                        self._handle(conn, text or "")
                    continue
                except queue.Empty:
                    pass
                if self.paused:
                    next_due = time.monotonic() + period
                    continue
                self.session.engine.step()
                ticked += 1
                self.hub.broadcast(self._snapshot_frame())
                self._flush_changes()
                next_due += period
                if next_due < time.monotonic() - 1.0:
                    next_due = time.monotonic()  # fell far behind; drop the backlog
        finally:
            self.listener.close()
            self.hub.close_all()


def serve(
    session: Session,
    port: int,
    tick_hz: Optional[float] = None,
    host: str = "127.0.0.1",
    stop: Optional[threading.Event] = None,
    ready: Optional[Callable[[int], None]] = None,
) -> None:
    """Bind and serve; blocks until stopped or interrupted."""
    listener = WSListener(host, port)
    if ready is not None:
        ready(listener.port)
    Server(session, listener, tick_hz=tick_hz, stop=stop).run()
