/** Wire protocol types and guards. Mirror of docs/protocol.md. */

export const PROTOCOL_VERSION = 1;

export interface Snapshot {
  tick: number;
  x: number;
  y: number;
  heading: number;
  speed: number;
  spin: number;
  grip: "open" | "closed";
  holding: string | null;
  lift: number;
  range: number | null;
}

export interface WorldObject {
  name: string;
  x: number;
  y: number;
  radius: number;
  graspable: boolean;
  held: boolean;
}

export interface Obstacle {
  x: number;
  y: number;
  radius: number;
}

export interface HelloFrame {
  v: number;
  type: "hello";
  speakers: string[];
  tick_hz: number;
  user: string;
}

export interface StateFrame extends Snapshot {
  v: number;
  type: "state";
}

export interface WorldFrame {
  v: number;
  type: "world";
  bounds: [number, number, number, number];
  obstacles: Obstacle[];
  objects: WorldObject[];
}

export interface EventFrame {
  v: number;
  type: "event";
  record: Record<string, unknown> & { tick: number; kind: string };
}

export interface SpeechFrame {
  v: number;
  type: "speech";
  text: string;
  tick: number;
}

/** Conversational reply; `kind` narrows it (ack / reply / posted). */
export interface ReplyFrame {
  v: number;
  type: "reply";
  kind: "ack" | "reply" | "posted";
  text?: string;
  what?: string;
  name?: string;
  pos?: number;
  focus?: number;
}

export interface MemoryRecord {
  id: number;
  lex: string[];
  belief: number;
  level: string;
  active: boolean;
  edges: { role: string; to: number }[];
}

export interface MemoryFrame {
  v: number;
  type: "memory";
  attention: MemoryRecord[];
  working: MemoryRecord[];
  halo: MemoryRecord[];
}

export interface KbFrame {
  v: number;
  type: "kb";
  text: string;
}

export interface ErrorFrame {
  v: number;
  type: "error";
  text: string;
}

export type Frame =
  | HelloFrame
  | StateFrame
  | WorldFrame
  | EventFrame
  | SpeechFrame
  | ReplyFrame
  | MemoryFrame
  | KbFrame
  | ErrorFrame;

const FRAME_TYPES = new Set([
  "hello",
  "state",
  "world",
  "event",
  "speech",
  "reply",
  "memory",
  "kb",
  "error",
]);

/** Parse one wire frame; null for anything malformed or unknown. */
export function parseFrame(text: string): Frame | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const obj = raw as { v?: unknown; type?: unknown };
  if (obj.v !== PROTOCOL_VERSION) return null;
  if (typeof obj.type !== "string" || !FRAME_TYPES.has(obj.type)) return null;
  return raw as Frame;
}

// -- client to server ---------------------------------------------------------

export function utteranceMessage(text: string, speaker?: string): string {
  const msg: Record<string, unknown> = { v: PROTOCOL_VERSION, type: "utterance", text };
  if (speaker) msg.speaker = speaker;
  return JSON.stringify(msg);
}

export function resetMessage(): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "reset" });
}

export function setSeedMessage(seed: number): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "set-seed", seed });
}

export function pauseMessage(): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "pause" });
}

export function resumeMessage(): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "resume" });
}

export function placeObjectMessage(
  name: string,
  x: number,
  y: number,
  radius: number,
  graspable: boolean,
): string {
  return JSON.stringify({
    v: PROTOCOL_VERSION,
    type: "place-object",
    name,
    x,
    y,
    radius,
    graspable,
  });
}

export function dumpMessage(): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, type: "dump" });
}
