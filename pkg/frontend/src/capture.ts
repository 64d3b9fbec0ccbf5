// Landmark sources. The camera path extracts the 33 pose landmarks
// in-browser and only landmark data ever leaves the page; raw video
// stays local. A synthetic source animates a lift cycle for demos and
// tests without a camera.

import { LANDMARK_COUNT, Landmark } from "./protocol.js";

export type FrameCallback = (t: number, lm: Landmark[]) => void;

export interface LandmarkSource {
  start(onFrame: FrameCallback): Promise<void>;
  stop(): void;
}

export type CaptureFailure = "permission" | "model" | "unsupported";

export class CaptureError extends Error {
  constructor(
    readonly kind: CaptureFailure,
    message: string,
  ) {
    super(message);
  }
}

/** Landmarks below this mean visibility mean "no person": the frame is
 *  dropped, not sent. */
export const VISIBILITY_GATE = 0.5;

export function meanVisibility(lm: Landmark[]): number {
  let total = 0;
  for (const quad of lm) total += quad[3];
  return total / lm.length;
}

export interface SyntheticOptions {
  fps?: number;
  /** Constant visibility written into every landmark. */
  visibility?: number;
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
  now?: () => number;
}

/** Deterministic stand-bend-stand motion, 33 plausible landmarks per
 *  frame. Stands in for the camera wherever one is unavailable. */
export class SyntheticLandmarkSource implements LandmarkSource {
  private handle: unknown = null;
  private frameIndex = 0;
  private readonly fps: number;
  private readonly visibility: number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly cancel: (handle: unknown) => void;

  constructor(options: SyntheticOptions = {}) {
    this.fps = options.fps ?? 30;
    this.visibility = options.visibility ?? 1.0;
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = options.cancel ?? ((handle) => clearTimeout(handle as number));
  }

  async start(onFrame: FrameCallback): Promise<void> {
    const periodMs = Math.ceil(1000 / this.fps);
    const tick = () => {
      const t = Math.round(this.frameIndex * periodMs);
      const lm = this.frame(this.frameIndex);
      this.frameIndex += 1;
      if (meanVisibility(lm) >= VISIBILITY_GATE) {
        onFrame(t, lm);
      }
      this.handle = this.schedule(tick, periodMs);
    };
    this.handle = this.schedule(tick, periodMs);
  }

  stop(): void {
    if (this.handle !== null) {
      this.cancel(this.handle);
      this.handle = null;
    }
  }

  private frame(index: number): Landmark[] {
    // one lift cycle every 60 frames: phase 0 upright, 1 fully bent
    const phase = (1 - Math.cos((2 * Math.PI * index) / 60)) / 2;
    const lm: Landmark[] = [];
    const bend = 0.18 * phase;
    for (let i = 0; i < LANDMARK_COUNT; i++) {
      const isHead = i < 11;
      const isArm = i >= 11 && i <= 22;
      const row = isHead ? 0.2 : isArm ? 0.45 : 0.75;
      const drop = isHead ? bend * 1.6 : isArm ? bend : bend * 0.2;
      const x = 0.5 + (i % 2 === 0 ? 1 : -1) * 0.02 * (i % 7) + (isHead ? 0 : bend / 3);
      lm.push([x, row + drop, 0.05 * phase, this.visibility]);
    }
    return lm;
  }
}

type PoseLandmarkerLike = {
  detectForVideo(
    video: HTMLVideoElement,
    timestampMs: number,
  ): { landmarks: { x: number; y: number; z: number; visibility?: number }[][] };
  close(): void;
};

const TASKS_VISION_URL =
  "https://cdn.jsdelivr.net/npm/@mediapipe/tasks-vision@0.10.14";
const POSE_MODEL_URL =
  "https://storage.googleapis.com/mediapipe-models/pose_landmarker/pose_landmarker_lite/float16/1/pose_landmarker_lite.task";

/** Webcam capture + in-browser pose landmarks (browser only). Frames
 *  with no visible person are gated out before they reach the wire. */
export class MediaPipeLandmarkSource implements LandmarkSource {
  private stream: MediaStream | null = null;
  private landmarker: PoseLandmarkerLike | null = null;
  private running = false;

  constructor(private readonly video: HTMLVideoElement) {}

  async start(onFrame: FrameCallback): Promise<void> {
    if (!navigator.mediaDevices?.getUserMedia) {
      throw new CaptureError("unsupported", "this browser cannot capture video");
    }
    try {
      this.stream = await navigator.mediaDevices.getUserMedia({ video: true });
    } catch (err) {
      throw new CaptureError("permission", `camera permission denied: ${String(err)}`);
    }
    this.video.srcObject = this.stream;
    await this.video.play();
    try {
      const vision = await import(/* @vite-ignore */ `${TASKS_VISION_URL}/vision_bundle.mjs`);
      const fileset = await vision.FilesetResolver.forVisionTasks(`${TASKS_VISION_URL}/wasm`);
      this.landmarker = (await vision.PoseLandmarker.createFromOptions(fileset, {
        baseOptions: { modelAssetPath: POSE_MODEL_URL },
        runningMode: "VIDEO",
        numPoses: 1,
      })) as PoseLandmarkerLike;
    } catch (err) {
      this.stop();
      throw new CaptureError("model", `pose model failed to load: ${String(err)}`);
    }
    this.running = true;
    const loop = () => {
      if (!this.running || !this.landmarker) return;
      const now = Math.round(performance.now());
      const result = this.landmarker.detectForVideo(this.video, now);
      const pose = result.landmarks[0];
      if (pose && pose.length === LANDMARK_COUNT) {
        const lm: Landmark[] = pose.map((p) => [p.x, p.y, p.z, p.visibility ?? 0]);
        if (meanVisibility(lm) >= VISIBILITY_GATE) {
          onFrame(now, lm);
        }
      }
      requestAnimationFrame(loop);
    };
    requestAnimationFrame(loop);
  }

  stop(): void {
    this.running = false;
    this.landmarker?.close();
    this.landmarker = null;
    this.stream?.getTracks().forEach((track) => track.stop());
    this.stream = null;
  }
}
