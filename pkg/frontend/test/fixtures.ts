import { ImageRecord, ResultRow, Stats } from "../src/types";

export const detectionRecord: ImageRecord = {
  image_id: "01HZXW5T9GQ8K2M4N6P8R0T2V4",
  meta: {
    device_id: "esp32-01",
    captured_at: "2024-05-01T10:00:00.000Z",
    altitude_m: 12.5,
    frame_kind: "canopy_wide",
    sequence_no: 7,
  },
  width_px: 1600,
  height_px: 1200,
  byte_len: 123456,
  status: "processed",
  task: "apple_detection",
  failure_reason: "",
};

export const detectionResult: ResultRow = {
  result_id: "01HZXW5TA0AAAAAAAAAAAAAAAA",
  image_id: detectionRecord.image_id,
  task: "apple_detection",
  payload: [
    { box: [100, 200, 300, 400], score: 0.91, class_id: 0 },
    { box: [800, 100, 1000, 350], score: 0.64, class_id: 0 },
  ],
  label: null,
  latency_ms: 12.5,
  model_version: "stub-1",
  created_at: 1714557600000,
};

export const classificationResult: ResultRow = {
  result_id: "01HZXW5TB0BBBBBBBBBBBBBBBB",
  image_id: detectionRecord.image_id,
  task: "leaf_disease",
  payload: {
    task: "leaf_disease",
    probs: [0.1, 0.7, 0.1, 0.1],
    label: "black_rot",
    confidence: 0.7,
  },
  label: "black_rot",
  latency_ms: 8.1,
  model_version: "stub-1",
  created_at: 1714557600000,
};

export const zeroStats: Stats = {
  per_task: {},
  per_class: {},
  failures: 0,
  queue_depth: 0,
  processed: 0,
  received: 0,
  ingested: 0,
};
