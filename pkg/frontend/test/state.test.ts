import { describe, expect, it } from "vitest";

import {
  TIMELINE_WINDOW_MS,
  initialState,
  isWarmingUp,
  onFrameSent,
  onPrediction,
  onReady,
  onServerError,
  warmupProgress,
} from "../src/state.js";
import { viewModel } from "../src/render.js";
import { predictionFor } from "./fakes.js";

function readyState() {
  return onReady(initialState(), { type: "ready", session: "s1", warmup: 30 });
}

describe("warm-up", () => {
  it("starts warming up with no label", () => {
    const vm = viewModel(readyState());
    expect(vm.showWarmup).toBe(true);
    expect(vm.label).toBeNull();
    expect(vm.riskLevel).toBeNull();
  });

  it("never shows a label before the first prediction message", () => {
    let state = readyState();
    for (let k = 0; k < 29; k++) {
      state = onFrameSent(state);
      const vm = viewModel(state);
      expect(vm.label).toBeNull();
      expect(vm.showWarmup).toBe(true);
    }
    expect(warmupProgress(state)).toBe(29);
  });

  it("progress is capped at the target", () => {
    let state = readyState();
    for (let k = 0; k < 50; k++) state = onFrameSent(state);
    expect(warmupProgress(state)).toBe(30);
  });

  it("warm-up ends only on a prediction", () => {
    let state = readyState();
    for (let k = 0; k < 30; k++) state = onFrameSent(state);
    expect(isWarmingUp(state)).toBe(true);
    state = onPrediction(state, predictionFor("good", 990), 1000);
    expect(isWarmingUp(state)).toBe(false);
  });
});

describe("prediction display", () => {
  it("label, confidence, and risk come straight from the message", () => {
    const state = onPrediction(readyState(), predictionFor("bad", 990, 0.97), 1000);
    const vm = viewModel(state);
    expect(vm.label).toBe("bad");
    expect(vm.labelText).toBe("Bad lift");
    expect(vm.confidencePct).toBe(97);
    expect(vm.riskLevel).toBe("high");
    expect(vm.riskText).toBe("High risk");
    expect(vm.riskColor).not.toBe("transparent");
  });

  it("risk colors distinguish the three levels", () => {
    const colors = new Set(
      (["low", "medium", "high"] as const).map((level) => {
        const msg = predictionFor("bad", 0, 0.9, { level, score: 0.5 });
        return viewModel(onPrediction(readyState(), msg, 0)).riskColor;
      }),
    );
    expect(colors.size).toBe(3);
  });
});

describe("timeline", () => {
  it("keeps alternating predictions in order without gaps", () => {
    let state = readyState();
    for (let k = 0; k < 30; k++) {
      const label = k % 2 === 0 ? "good" : "bad";
      state = onPrediction(state, predictionFor(label, k * 1000), k * 1000);
    }
    expect(state.timeline).toHaveLength(30);
    const labels = state.timeline.map((p) => p.label);
    for (let k = 0; k < labels.length; k++) {
      expect(labels[k]).toBe(k % 2 === 0 ? "good" : "bad");
    }
    const times = state.timeline.map((p) => p.at);
    expect([...times].sort((a, b) => a - b)).toEqual(times);
  });

  it("evicts points older than the 60 s window", () => {
    let state = readyState();
    state = onPrediction(state, predictionFor("good", 0), 0);
    state = onPrediction(state, predictionFor("bad", 1), 30_000);
    state = onPrediction(state, predictionFor("bad", 2), TIMELINE_WINDOW_MS + 15_000);
    expect(state.timeline.map((p) => p.at)).toEqual([30_000, TIMELINE_WINDOW_MS + 15_000]);
  });

  it("survives a reconnect while warm-up restarts", () => {
    let state = readyState();
    state = onPrediction(state, predictionFor("bad", 0), 100);
    state = onReady(state, { type: "ready", session: "s2", warmup: 30 });
    expect(state.timeline).toHaveLength(1);
    expect(state.sessionCount).toBe(2);
    expect(isWarmingUp(state)).toBe(true);
    expect(viewModel(state).sessionNote).toContain("reconnected");
  });
});

describe("errors", () => {
  it("server errors surface without clearing the prediction", () => {
    let state = onPrediction(readyState(), predictionFor("good", 0), 0);
    state = onServerError(state, { type: "error", code: "bad_frame", detail: "oops" });
    expect(state.lastError).toBe("bad_frame: oops");
    expect(state.prediction).not.toBeNull();
    expect(viewModel(state).errorText).toContain("oops");
  });
});
