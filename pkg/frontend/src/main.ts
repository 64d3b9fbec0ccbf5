// Page wiring: query-string config, capture -> client -> state -> render.
// Capture, socket, and render stay decoupled; frames are dropped (never
// queued) when the socket backs up, and the render loop runs on
// requestAnimationFrame.

import {
  CaptureError,
  LandmarkSource,
  MediaPipeLandmarkSource,
  SyntheticLandmarkSource,
} from "./capture.js";
import { StreamClient } from "./client.js";
import { drawSkeleton } from "./overlay.js";
import { Landmark } from "./protocol.js";
import { DomElements, applyToDom, drawTimeline, viewModel } from "./render.js";
import {
  TIMELINE_WINDOW_MS,
  UiState,
  initialState,
  onFrameSent,
  onPrediction,
  onReady,
  onServerError,
  onStatus,
  toggleOverlay,
} from "./state.js";

function requireEl(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function serverUrl(): string {
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? `${window.location.hostname}:8765`;
  return `ws://${server}/ws`;
}

function main(): void {
  let state: UiState = initialState();
  const update = (next: UiState) => {
    state = next;
  };

  const els: DomElements = {
    status: requireEl("status"),
    warmup: requireEl("warmup"),
    warmupBar: requireEl("warmup-bar"),
    label: requireEl("label"),
    confidenceBar: requireEl("confidence-bar"),
    confidenceText: requireEl("confidence-text"),
    riskBadge: requireEl("risk-badge"),
    session: requireEl("session"),
    error: requireEl("error"),
  };
  const video = requireEl("video") as HTMLVideoElement;
  const overlayCanvas = requireEl("overlay") as HTMLCanvasElement;
  const timelineCanvas = requireEl("timeline") as HTMLCanvasElement;
  const overlayToggle = requireEl("overlay-toggle") as HTMLInputElement;

  let latestFrame: Landmark[] | null = null;

  const client = new StreamClient(serverUrl(), {
    onStatus: (status) => update(onStatus(state, status)),
    onReady: (msg) => update(onReady(state, msg)),
    onPrediction: (msg) => update(onPrediction(state, msg, performance.now())),
    onServerError: (msg) => update(onServerError(state, msg)),
  });
  client.connect();

  const params = new URLSearchParams(window.location.search);
  const source: LandmarkSource =
    params.get("source") === "synthetic"
      ? new SyntheticLandmarkSource()
      : new MediaPipeLandmarkSource(video);

  source
    .start((t, lm) => {
      latestFrame = lm;
      if (client.sendFrame(t, lm)) {
        update(onFrameSent(state));
      }
    })
    .catch((err: unknown) => {
      const detail =
        err instanceof CaptureError
          ? err.kind === "permission"
            ? "Camera permission is required: allow access and reload, or add ?source=synthetic to try without a camera."
            : err.message
          : String(err);
      update({ ...state, lastError: detail });
    });

  overlayToggle.addEventListener("change", () => {
    update(toggleOverlay(state, overlayToggle.checked));
  });

  const ctx = overlayCanvas.getContext("2d");
  const renderLoop = () => {
    applyToDom(viewModel(state), els);
    if (ctx) {
      if (state.overlayEnabled && latestFrame) {
        drawSkeleton(ctx, latestFrame, overlayCanvas.width, overlayCanvas.height);
      } else {
        ctx.clearRect(0, 0, overlayCanvas.width, overlayCanvas.height);
      }
    }
    drawTimeline(timelineCanvas, state.timeline, performance.now(), TIMELINE_WINDOW_MS);
    requestAnimationFrame(renderLoop);
  };
  requestAnimationFrame(renderLoop);

  window.addEventListener("beforeunload", () => {
    source.stop();
    client.close();
  });
}

main();
