// Wire protocol shared with the risk service: one JSON object per
// websocket text frame. The client only ever sends hello and frame
// messages; everything rendered on screen originates from a server
// message.

export const PROTO_VERSION = 1;
export const LANDMARK_COUNT = 33;
export const WARMUP_FRAMES = 30;

/** One landmark as sent on the wire: [x, y, z, visibility]. */
export type Landmark = [number, number, number, number];

export type RiskLevel = "low" | "medium" | "high";
export type PostureLabel = "good" | "bad";

export interface HelloMessage {
  type: "hello";
  proto: number;
}

export interface FrameMessage {
  type: "frame";
  t: number;
  lm: Landmark[];
}

export interface ReadyMessage {
  type: "ready";
  session: string;
  warmup: number;
}

export interface RiskInfo {
  level: RiskLevel;
  score: number;
}

export interface PredictionMessage {
  type: "prediction";
  t: number;
  label: PostureLabel;
  probs: [number, number];
  confidence: number;
  risk: RiskInfo;
}

export interface ErrorMessage {
  type: "error";
  code: "bad_frame" | "proto" | "internal";
  detail: string;
}

export type ServerMessage = ReadyMessage | PredictionMessage | ErrorMessage;
export type ClientMessage = HelloMessage | FrameMessage;

export class ProtocolError extends Error {}

export function helloMessage(): HelloMessage {
  return { type: "hello", proto: PROTO_VERSION };
}

export function frameMessage(t: number, lm: Landmark[]): FrameMessage {
  if (!Number.isInteger(t)) {
    throw new ProtocolError(`frame timestamp must be integer milliseconds, got ${t}`);
  }
  if (lm.length !== LANDMARK_COUNT) {
    throw new ProtocolError(`frame needs ${LANDMARK_COUNT} landmarks, got ${lm.length}`);
  }
  for (const quad of lm) {
    if (quad.length !== 4 || quad.some((v) => typeof v !== "number" || !Number.isFinite(v))) {
      throw new ProtocolError("each landmark must be four finite numbers");
    }
  }
  return { type: "frame", t, lm };
}

export function serialize(message: ClientMessage): string {
  return JSON.stringify(message);
}

function isRisk(value: unknown): value is RiskInfo {
  if (typeof value !== "object" || value === null) return false;
  const risk = value as Record<string, unknown>;
  return (
    (risk.level === "low" || risk.level === "medium" || risk.level === "high") &&
    typeof risk.score === "number"
  );
}

export function parseServerMessage(raw: string): ServerMessage {
  let value: unknown;
  try {
    value = JSON.parse(raw);
  } catch {
    throw new ProtocolError("server message is not JSON");
  }
  if (typeof value !== "object" || value === null) {
    throw new ProtocolError("server message is not an object");
  }
  const msg = value as Record<string, unknown>;
  switch (msg.type) {
    case "ready":
      if (typeof msg.session !== "string" || typeof msg.warmup !== "number") {
        throw new ProtocolError("malformed ready message");
      }
      return { type: "ready", session: msg.session, warmup: msg.warmup };
    case "prediction": {
      const probs = msg.probs;
      if (
        typeof msg.t !== "number" ||
        (msg.label !== "good" && msg.label !== "bad") ||
        !Array.isArray(probs) ||
        probs.length !== 2 ||
        probs.some((p) => typeof p !== "number") ||
        typeof msg.confidence !== "number" ||
        !isRisk(msg.risk)
      ) {
        throw new ProtocolError("malformed prediction message");
      }
      return {
        type: "prediction",
        t: msg.t,
        label: msg.label,
        probs: [probs[0] as number, probs[1] as number],
        confidence: msg.confidence,
        risk: msg.risk,
      };
    }
    case "error":
      if (
        (msg.code !== "bad_frame" && msg.code !== "proto" && msg.code !== "internal") ||
        typeof msg.detail !== "string"
      ) {
        throw new ProtocolError("malformed error message");
      }
      return { type: "error", code: msg.code, detail: msg.detail };
    default:
      throw new ProtocolError(`unknown server message type ${String(msg.type)}`);
  }
}
