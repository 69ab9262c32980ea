// Overlay geometry: server boxes are in original-image pixels; the view
// draws them on an image rendered at some display scale.

import { DetectionPayload } from "./types";

export interface OverlayRect {
  left: number;
  top: number;
  width: number;
  height: number;
  score: number;
}

/** Scale factor so the image fits the container width (never upscaled). */
export function displayScale(naturalWidth: number, containerWidth: number): number {
  if (naturalWidth <= 0) return 1;
  return Math.min(1, containerWidth / naturalWidth);
}

/** Overlay rectangle = server box coordinates x display scale. */
export function overlayRect(det: DetectionPayload, scale: number): OverlayRect {
  const [x1, y1, x2, y2] = det.box;
  return {
    left: x1 * scale,
    top: y1 * scale,
    width: (x2 - x1) * scale,
    height: (y2 - y1) * scale,
    score: det.score,
  };
}

export function overlayRects(dets: DetectionPayload[], scale: number): OverlayRect[] {
  return dets.map((d) => overlayRect(d, scale));
}
