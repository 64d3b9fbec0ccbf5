// View-model computation (pure, tested) and the thin DOM applier.
// Colors carry text labels alongside them for accessibility.

import { UiState, isWarmingUp, warmupProgress } from "./state.js";

export interface ViewModel {
  statusText: string;
  showWarmup: boolean;
  warmupText: string;
  warmupFraction: number;
  label: "good" | "bad" | null;
  labelText: string;
  confidencePct: number | null;
  riskLevel: "low" | "medium" | "high" | null;
  riskText: string;
  riskColor: string;
  sessionNote: string;
  errorText: string | null;
}

const RISK_COLORS = { low: "#1a9850", medium: "#e6a817", high: "#d73027" } as const;
const RISK_TEXT = { low: "Low risk", medium: "Medium risk", high: "High risk" } as const;

export function viewModel(state: UiState): ViewModel {
  const warming = isWarmingUp(state);
  const progress = warmupProgress(state);
  const prediction = state.prediction;
  const statusText =
    state.status === "connected"
      ? "connected"
      : state.status === "reconnecting"
        ? "reconnecting..."
        : state.status;
  return {
    statusText,
    showWarmup: warming,
    warmupText: `warming up: ${progress} / ${state.warmupTarget} frames`,
    warmupFraction: state.warmupTarget ? progress / state.warmupTarget : 0,
    label: prediction?.label ?? null,
    labelText: prediction ? (prediction.label === "good" ? "Good lift" : "Bad lift") : "",
    confidencePct: prediction ? Math.round(prediction.confidence * 100) : null,
    riskLevel: state.risk?.level ?? null,
    riskText: state.risk ? RISK_TEXT[state.risk.level] : "",
    riskColor: state.risk ? RISK_COLORS[state.risk.level] : "transparent",
    sessionNote:
      state.sessionCount > 1
        ? `session ${state.sessionCount} (reconnected, fresh warm-up)`
        : state.sessionId
          ? `session ${state.sessionCount}`
          : "",
    errorText: state.lastError,
  };
}

export interface DomElements {
  status: HTMLElement;
  warmup: HTMLElement;
  warmupBar: HTMLElement;
  label: HTMLElement;
  confidenceBar: HTMLElement;
  confidenceText: HTMLElement;
  riskBadge: HTMLElement;
  session: HTMLElement;
  error: HTMLElement;
}

export function applyToDom(vm: ViewModel, els: DomElements): void {
  els.status.textContent = vm.statusText;
  els.warmup.style.display = vm.showWarmup ? "" : "none";
  els.warmup.textContent = vm.warmupText;
  els.warmupBar.style.width = `${Math.round(vm.warmupFraction * 100)}%`;
  els.label.textContent = vm.labelText;
  els.label.className = vm.label ? `label label-${vm.label}` : "label";
  els.confidenceBar.style.width = vm.confidencePct === null ? "0%" : `${vm.confidencePct}%`;
  els.confidenceText.textContent =
    vm.confidencePct === null ? "" : `${vm.confidencePct}% confident`;
  els.riskBadge.textContent = vm.riskText;
  els.riskBadge.style.backgroundColor = vm.riskColor;
  els.riskBadge.className = vm.riskLevel ? `risk risk-${vm.riskLevel}` : "risk";
  els.session.textContent = vm.sessionNote;
  els.error.textContent = vm.errorText ?? "";
  els.error.style.display = vm.errorText ? "" : "none";
}

export interface TimelineCanvas {
  width: number;
  height: number;
  getContext(kind: "2d"): CanvasRenderingContext2D | null;
}

/** Draw the rolling risk timeline: one bar per prediction, colored by
 *  level, newest at the right edge. */
export function drawTimeline(
  canvas: TimelineCanvas,
  points: { at: number; score: number; level: "low" | "medium" | "high" }[],
  now: number,
  windowMs: number,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (const point of points) {
    const age = now - point.at;
    if (age < 0 || age > windowMs) continue;
    const x = canvas.width * (1 - age / windowMs);
    const barHeight = Math.max(2, point.score * canvas.height);
    ctx.fillStyle = RISK_COLORS[point.level];
    ctx.fillRect(x - 1, canvas.height - barHeight, 2, barHeight);
  }
}
