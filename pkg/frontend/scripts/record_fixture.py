"""Record a live protocol stream into a replay fixture.

Starts the robot server unthrottled, teaches the dance routine, asks
for it, and saves every frame the server sent, one JSON object per
line, to test/fixtures/dance.jsonl. The fixture is committed; rerun
this only when the wire protocol changes.

Usage: python3 scripts/record_fixture.py
"""

import json
import threading
import time
from pathlib import Path

from websockets.sync.client import connect

from sayso.service import Session, serve

UTTERANCES = [
    "to cha-cha drive forward then drive backwards",
    "to shimmy turn left then turn right",
    "to dance cha-cha then shimmy",
    "please dance",
]

OUT = Path(__file__).resolve().parent.parent / "test" / "fixtures" / "dance.jsonl"


def main() -> None:
    stop = threading.Event()
    port_box: list[int] = []
    server = threading.Thread(
        target=serve,
        args=(Session(seed=0),),
        kwargs={"port": 0, "tick_hz": 0, "stop": stop, "ready": port_box.append},
        daemon=True,
    )
    server.start()
    while not port_box:
        time.sleep(0.01)

    lines: list[str] = []
    with connect(f"ws://127.0.0.1:{port_box[0]}") as ws:

        def pump(done, timeout=30.0):
            deadline = time.monotonic() + timeout
            while time.monotonic() < deadline:
                try:
                    msg = ws.recv(timeout=0.5)
                except TimeoutError:
                    continue
                lines.append(msg)
                frame = json.loads(msg)
                if done(frame):
                    return frame
            raise RuntimeError("timed out waiting for a frame")

        pump(lambda f: f["type"] == "memory")  # end of the greeting
        for text in UTTERANCES[:3]:
            ws.send(json.dumps({"v": 1, "type": "utterance", "text": text}))
            pump(lambda f: f["type"] == "reply" and f.get("kind") == "ack")
        ws.send(json.dumps({"v": 1, "type": "utterance", "text": UTTERANCES[3]}))
        posted = pump(lambda f: f["type"] == "reply" and f.get("kind") == "posted")
        fid = posted["focus"]
        pump(
            lambda f: f["type"] == "event"
            and f["record"].get("kind") == "FOCUS"
            and f["record"].get("focus") == fid
        )
        pump(lambda f: f["type"] == "state")  # one more snapshot past the finish

    stop.set()
    server.join(timeout=5)
    OUT.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(lines)} frames to {OUT}")


if __name__ == "__main__":
    main()
