// Mirrors of the /api/v1 JSON shapes.

export interface CaptureMeta {
  device_id: string;
  captured_at: string;
  altitude_m: number;
  frame_kind: string;
  sequence_no: number;
}

export interface ImageRecord {
  image_id: string;
  meta: CaptureMeta;
  width_px: number;
  height_px: number;
  byte_len: number;
  status: "received" | "queued" | "processed" | "failed";
  task: string;
  failure_reason: string;
}

export interface ImagePage {
  images: ImageRecord[];
  next: string | null;
}

export interface ClassificationPayload {
  task: string;
  probs: number[];
  label: string;
  confidence: number;
}

export interface DetectionPayload {
  box: [number, number, number, number];
  score: number;
  class_id: number;
}

export interface ResultRow {
  result_id: string;
  image_id: string;
  task: string;
  payload: ClassificationPayload | DetectionPayload[];
  label: string | null;
  latency_ms: number;
  model_version: string;
  created_at: number;
}

export interface Stats {
  per_task: Record<string, number>;
  per_class: Record<string, number>;
  failures: number;
  queue_depth: number;
  processed: number;
  received: number;
  ingested: number;
}

export const CLASS_LABELS: Record<string, string[]> = {
  leaf_disease: ["apple_scab", "black_rot", "cedar_apple_rust", "healthy"],
  freshness: ["fresh", "rotten"],
};

export function isDetectionResult(r: ResultRow): r is ResultRow & { payload: DetectionPayload[] } {
  return Array.isArray(r.payload);
}
