import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { applyFrame, emptyModel, listKb, noteSent, UiModel } from "../src/model";
import { Frame, parseFrame, StateFrame } from "../src/protocol";

const FIXTURE = new URL("./fixtures/dance.jsonl", import.meta.url);

function fixtureFrames(): Frame[] {
  const lines = readFileSync(FIXTURE, "utf8").trim().split("\n");
  return lines.map((line, i) => {
    const frame = parseFrame(line);
    expect(frame, `fixture line ${i + 1} must parse`).not.toBeNull();
    return frame!;
  });
}

function replay(): { model: UiModel; frames: Frame[] } {
  const model = emptyModel();
  const frames = fixtureFrames();
  for (const frame of frames) applyFrame(model, frame);
  return { model, frames };
}

describe("fixture replay", () => {
  it("tracks the last snapshot without simulating anything", () => {
    const { model, frames } = replay();
    const states = frames.filter((f): f is StateFrame => f.type === "state");
    const last = states[states.length - 1];
    expect(model.snapshot).not.toBeNull();
    expect(model.snapshot!.tick).toBe(last.tick);
    expect(model.snapshot!.x).toBe(last.x);
    expect(model.snapshot!.y).toBe(last.y);
    expect(model.snapshot!.heading).toBe(last.heading);
  });

  it("seeds the speaker picker from hello", () => {
    const { model } = replay();
    expect(model.speakers).toEqual(["user"]);
    expect(model.user).toBe("user");
    expect(model.tickHz).toBe(0);
  });

  it("keeps the arena inventory from the world frame", () => {
    const { model } = replay();
    expect(model.bounds).toEqual([0, 0, 4, 4]);
    expect(model.objects.map((o) => o.name).sort()).toEqual(["block", "box", "mary"]);
    const box = model.objects.find((o) => o.name === "box")!;
    expect(box.graspable).toBe(false);
  });

  it("collects the robot's side of the conversation", () => {
    const { model } = replay();
    const robot = model.transcript.filter((e) => e.who === "robot").map((e) => e.text);
    // three teaching acks, then the spoken acknowledgement of the command
    expect(robot).toEqual(["okay", "okay", "okay", "okay"]);
  });

  it("retains memory dumps by level", () => {
    const { model } = replay();
    const total =
      model.memory.attention.length + model.memory.working.length + model.memory.halo.length;
    expect(total).toBeGreaterThan(0);
    for (const rec of model.memory.attention) {
      expect(rec).toHaveProperty("id");
      expect(rec).toHaveProperty("lex");
      expect(rec).toHaveProperty("edges");
    }
  });
});

describe("model bookkeeping", () => {
  it("records sent lines and learns new speakers", () => {
    const model = emptyModel();
    noteSent(model, "ann", "turn right");
    expect(model.transcript).toEqual([{ who: "ann", text: "turn right" }]);
    expect(model.speakers).toContain("ann");
    noteSent(model, "ann", "again");
    expect(model.speakers.filter((s) => s === "ann")).toHaveLength(1);
  });

  it("shows rejections in the transcript but not postings", () => {
    const model = emptyModel();
    applyFrame(model, parseFrame('{"v":1,"type":"reply","kind":"reply","text":"I don\'t understand","pos":1}')!);
    applyFrame(model, parseFrame('{"v":1,"type":"reply","kind":"posted","focus":3,"what":"command"}')!);
    expect(model.transcript).toEqual([{ who: "robot", text: "I don't understand" }]);
  });

  it("caps the event log", () => {
    const model = emptyModel();
    for (let i = 0; i < 650; i++) {
      applyFrame(model, parseFrame(`{"v":1,"type":"event","record":{"tick":${i},"kind":"DO"}}`)!);
    }
    expect(model.eventLog.length).toBe(500);
    expect(JSON.parse(model.eventLog[499]).tick).toBe(649);
  });

  it("keeps error frames", () => {
    const model = emptyModel();
    applyFrame(model, parseFrame('{"v":1,"type":"error","text":"unknown message type"}')!);
    expect(model.errors).toEqual(["unknown message type"]);
  });
});

describe("kb listing", () => {
  it("names every block in order", () => {
    const text = [
      "op {",
      "  name: base-drive",
      "  pref: 1.0",
      "}",
      "",
      "rule {",
      "  name: girl-person",
      "  conf: 1.0",
      "}",
      "op {",
      "  name: to-dance",
      "}",
    ].join("\n");
    expect(listKb(text)).toEqual({
      operators: ["base-drive", "to-dance"],
      rules: ["girl-person"],
    });
  });

  it("ignores name-like lines outside blocks", () => {
    expect(listKb("name: loose\n")).toEqual({ operators: [], rules: [] });
  });
});
