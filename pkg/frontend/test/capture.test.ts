import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { SyntheticLandmarkSource, VISIBILITY_GATE, meanVisibility } from "../src/capture.js";
import { LANDMARK_COUNT, Landmark } from "../src/protocol.js";

describe("SyntheticLandmarkSource", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("emits full 33-landmark frames at the camera rate", async () => {
    const frames: Landmark[][] = [];
    const source = new SyntheticLandmarkSource({ fps: 30 });
    await source.start((_, lm) => frames.push(lm));
    vi.advanceTimersByTime(10_000);
    source.stop();
    // 10 s at 30 fps: at most 300 messages, and well above the 15/s floor
    expect(frames.length).toBeLessThanOrEqual(300);
    expect(frames.length).toBeGreaterThanOrEqual(150);
    for (const lm of frames.slice(0, 5)) {
      expect(lm).toHaveLength(LANDMARK_COUNT);
      for (const quad of lm) {
        expect(quad).toHaveLength(4);
        expect(quad.every((v) => Number.isFinite(v))).toBe(true);
      }
    }
  });

  it("timestamps are monotonic integers", async () => {
    const stamps: number[] = [];
    const source = new SyntheticLandmarkSource({ fps: 30 });
    await source.start((t) => stamps.push(t));
    vi.advanceTimersByTime(1000);
    source.stop();
    expect(stamps.every((t) => Number.isInteger(t))).toBe(true);
    for (let k = 1; k < stamps.length; k++) {
      expect(stamps[k]!).toBeGreaterThan(stamps[k - 1]!);
    }
  });

  it("gates frames when no person is visible", async () => {
    const frames: Landmark[][] = [];
    const source = new SyntheticLandmarkSource({ fps: 30, visibility: 0.1 });
    await source.start((_, lm) => frames.push(lm));
    vi.advanceTimersByTime(2000);
    source.stop();
    expect(frames).toHaveLength(0);
  });

  it("stop() halts emission", async () => {
    const frames: Landmark[][] = [];
    const source = new SyntheticLandmarkSource({ fps: 30 });
    await source.start((_, lm) => frames.push(lm));
    vi.advanceTimersByTime(500);
    source.stop();
    const seen = frames.length;
    vi.advanceTimersByTime(2000);
    expect(frames.length).toBe(seen);
  });
});

describe("visibility gate", () => {
  it("mean visibility drives the gate", () => {
    const visible: Landmark[] = Array.from({ length: 33 }, () => [0.5, 0.5, 0, 0.9]);
    const hidden: Landmark[] = Array.from({ length: 33 }, () => [0.5, 0.5, 0, 0.2]);
    expect(meanVisibility(visible)).toBeGreaterThanOrEqual(VISIBILITY_GATE);
    expect(meanVisibility(hidden)).toBeLessThan(VISIBILITY_GATE);
  });
});
