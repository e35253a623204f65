/** Pure view model: fold wire frames into render-ready state.
 *
 * Nothing in here simulates. The robot is exactly where the last
 * state frame said it was; the arena holds exactly what the last
 * world frame listed. All the client adds is bookkeeping.
 */

import type {
  Frame,
  MemoryRecord,
  Obstacle,
  ReplyFrame,
  Snapshot,
  WorldObject,
} from "./protocol.js";

export interface TranscriptEntry {
  who: string;
  text: string;
}

export interface UiModel {
  speakers: string[];
  user: string;
  tickHz: number | null;
  snapshot: Snapshot | null;
  bounds: [number, number, number, number];
  obstacles: Obstacle[];
  objects: WorldObject[];
  kbText: string;
  memory: { attention: MemoryRecord[]; working: MemoryRecord[]; halo: MemoryRecord[] };
  transcript: TranscriptEntry[];
  eventLog: string[];
  errors: string[];
}

const EVENT_LOG_CAP = 500;

export function emptyModel(): UiModel {
  return {
    speakers: [],
    user: "user",
    tickHz: null,
    snapshot: null,
    bounds: [0, 0, 4, 4],
    obstacles: [],
    objects: [],
    kbText: "",
    memory: { attention: [], working: [], halo: [] },
    transcript: [],
    eventLog: [],
    errors: [],
  };
}

/** Record a line the user just sent, so the transcript shows both sides. */
export function noteSent(model: UiModel, speaker: string, text: string): void {
  model.transcript.push({ who: speaker, text });
  if (!model.speakers.includes(speaker)) model.speakers.push(speaker);
}

function replyText(frame: ReplyFrame): string | null {
  switch (frame.kind) {
    case "ack":
      return frame.text ?? "okay";
    case "reply":
      return frame.text ?? "";
    case "posted":
      return null; // execution will speak for itself
  }
}

/** Apply one frame in place. Returns the model for chaining. */
export function applyFrame(model: UiModel, frame: Frame): UiModel {
  switch (frame.type) {
    case "hello":
      model.speakers = [...frame.speakers];
      model.user = frame.user;
      model.tickHz = frame.tick_hz;
      break;
    case "state": {
      const { v, type, ...snap } = frame;
      model.snapshot = snap as Snapshot;
      break;
    }
    case "world":
      model.bounds = frame.bounds;
      model.obstacles = frame.obstacles;
      model.objects = frame.objects;
      break;
    case "kb":
      model.kbText = frame.text;
      break;
    case "memory":
      model.memory = {
        attention: frame.attention,
        working: frame.working,
        halo: frame.halo,
      };
      break;
    case "speech":
      model.transcript.push({ who: "robot", text: frame.text });
      break;
    case "reply": {
      const text = replyText(frame);
      if (text !== null) model.transcript.push({ who: "robot", text });
      break;
    }
    case "event":
      model.eventLog.push(JSON.stringify(frame.record));
      if (model.eventLog.length > EVENT_LOG_CAP) {
        model.eventLog.splice(0, model.eventLog.length - EVENT_LOG_CAP);
      }
      break;
    case "error":
      model.errors.push(frame.text);
      break;
  }
  return model;
}

export interface KbListing {
  operators: string[];
  rules: string[];
}

/** Pull block names out of the knowledge-base text for the KB tab. */
export function listKb(text: string): KbListing {
  const operators: string[] = [];
  const rules: string[] = [];
  let current: string[] | null = null;
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed.startsWith("op {")) current = operators;
    else if (trimmed.startsWith("rule {")) current = rules;
    else if (trimmed.startsWith("name:") && current) {
      current.push(trimmed.slice("name:".length).trim());
      current = null; // one name per block
    } else if (trimmed === "}") current = null;
  }
  return { operators, rules };
}
