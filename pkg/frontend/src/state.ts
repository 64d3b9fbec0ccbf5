// UI state and its pure reducers. Every displayed value originates from
// a server message: no label exists before the first prediction arrives,
// and nothing here smooths or reinterprets what the server said.

import {
  ErrorMessage,
  PredictionMessage,
  ReadyMessage,
  RiskInfo,
  WARMUP_FRAMES,
} from "./protocol.js";
import { ConnectionStatus } from "./client.js";

/** Rolling risk history window, milliseconds. */
export const TIMELINE_WINDOW_MS = 60_000;

export interface TimelinePoint {
  at: number; // client clock, ms
  score: number;
  level: RiskInfo["level"];
  label: PredictionMessage["label"];
}

export interface UiState {
  status: ConnectionStatus;
  sessionId: string | null;
  /** How many sessions this page has opened; > 1 means reconnects. */
  sessionCount: number;
  warmupTarget: number;
  /** Frames sent since the current session became ready. */
  framesThisSession: number;
  prediction: PredictionMessage | null;
  risk: RiskInfo | null;
  timeline: TimelinePoint[];
  lastError: string | null;
  overlayEnabled: boolean;
}

export function initialState(): UiState {
  return {
    status: "idle",
    sessionId: null,
    sessionCount: 0,
    warmupTarget: WARMUP_FRAMES,
    framesThisSession: 0,
    prediction: null,
    risk: null,
    timeline: [],
    lastError: null,
    overlayEnabled: true,
  };
}

export function onStatus(state: UiState, status: ConnectionStatus): UiState {
  return { ...state, status };
}

/** A ready message starts a fresh server-side session: warm-up restarts,
 *  but the risk timeline is client history and survives reconnects. */
export function onReady(state: UiState, msg: ReadyMessage): UiState {
  return {
    ...state,
    status: "connected",
    sessionId: msg.session,
    sessionCount: state.sessionCount + 1,
    warmupTarget: msg.warmup,
    framesThisSession: 0,
    prediction: null,
    risk: null,
    lastError: null,
  };
}

export function onFrameSent(state: UiState): UiState {
  return { ...state, framesThisSession: state.framesThisSession + 1 };
}

export function onPrediction(state: UiState, msg: PredictionMessage, at: number): UiState {
  const point: TimelinePoint = {
    at,
    score: msg.risk.score,
    level: msg.risk.level,
    label: msg.label,
  };
  const horizon = at - TIMELINE_WINDOW_MS;
  const timeline = [...state.timeline.filter((p) => p.at >= horizon), point];
  return { ...state, prediction: msg, risk: msg.risk, timeline };
}

export function onServerError(state: UiState, msg: ErrorMessage): UiState {
  return { ...state, lastError: `${msg.code}: ${msg.detail}` };
}

export function toggleOverlay(state: UiState, enabled: boolean): UiState {
  return { ...state, overlayEnabled: enabled };
}

export function isWarmingUp(state: UiState): boolean {
  return state.prediction === null;
}

export function warmupProgress(state: UiState): number {
  return Math.min(state.framesThisSession, state.warmupTarget);
}
