// Skeleton overlay geometry: which landmarks connect, and where the
// segments land on a canvas. Pure functions; the draw call is the only
// canvas-touching piece.

import { Landmark } from "./protocol.js";

// Standard 33-landmark body topology (indices match the wire order).
export const SKELETON_EDGES: ReadonlyArray<readonly [number, number]> = [
  // torso
  [11, 12], [11, 23], [12, 24], [23, 24],
  // left arm, right arm
  [11, 13], [13, 15], [15, 17], [15, 19], [15, 21],
  [12, 14], [14, 16], [16, 18], [16, 20], [16, 22],
  // left leg, right leg
  [23, 25], [25, 27], [27, 29], [27, 31],
  [24, 26], [26, 28], [28, 30], [28, 32],
  // head
  [0, 7], [0, 8], [9, 10],
];

export interface Segment {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

/** Project visible skeleton edges into pixel space; endpoints below the
 *  visibility floor drop their segments. */
export function skeletonSegments(
  lm: Landmark[],
  width: number,
  height: number,
  minVisibility = 0.5,
): Segment[] {
  const segments: Segment[] = [];
  for (const [a, b] of SKELETON_EDGES) {
    const pa = lm[a];
    const pb = lm[b];
    if (!pa || !pb) continue;
    if (pa[3] < minVisibility || pb[3] < minVisibility) continue;
    segments.push({
      x1: pa[0] * width,
      y1: pa[1] * height,
      x2: pb[0] * width,
      y2: pb[1] * height,
    });
  }
  return segments;
}

export function drawSkeleton(
  ctx: CanvasRenderingContext2D,
  lm: Landmark[],
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#35e08f";
  ctx.lineWidth = 3;
  for (const seg of skeletonSegments(lm, width, height)) {
    ctx.beginPath();
    ctx.moveTo(seg.x1, seg.y1);
    ctx.lineTo(seg.x2, seg.y2);
    ctx.stroke();
  }
}
