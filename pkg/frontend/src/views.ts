// Pure data-to-HTML view functions. Rendering depends only on the fetched
// API payloads (plus the display scale), so every view is fixture-testable.

import { overlayRects } from "./overlay";
import {
  ClassificationPayload,
  ImageRecord,
  ResultRow,
  Stats,
} from "./types";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const pct = (x: number) => `${Math.round(x * 100)}%`;

export function feedView(records: ImageRecord[]): string {
  if (records.length === 0) {
    return `<p class="empty">No captures yet.</p>`;
  }
  const rows = records.map((r) => `
    <tr data-image-id="${esc(r.image_id)}">
      <td><a href="#detail/${esc(r.image_id)}">${esc(r.image_id)}</a></td>
      <td>${esc(r.meta.device_id)}</td>
      <td>${esc(r.task)}</td>
      <td><span class="badge badge-${esc(r.status)}">${esc(r.status)}</span></td>
      <td>${esc(r.meta.captured_at)}</td>
    </tr>`).join("");
  return `<table class="feed">
    <thead><tr><th>capture</th><th>device</th><th>task</th><th>status</th><th>captured</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

function classificationDetail(payload: ClassificationPayload): string {
  const labels = payloadLabels(payload);
  const bars = payload.probs.map((p, i) => `
    <div class="prob-row">
      <span class="prob-label">${esc(labels[i] ?? `class ${i}`)}</span>
      <div class="prob-bar"><div class="prob-fill" style="width:${pct(p)}"></div></div>
      <span class="prob-value">${pct(p)}</span>
    </div>`).join("");
  return `<h2 class="headline">${esc(payload.label)} ${pct(payload.confidence)}</h2>
    <div class="prob-bars">${bars}</div>`;
}

function payloadLabels(payload: ClassificationPayload): string[] {
  // label order is fixed server-side per task; fall back to indices
  const maps: Record<string, string[]> = {
    leaf_disease: ["apple_scab", "black_rot", "cedar_apple_rust", "healthy"],
    freshness: ["fresh", "rotten"],
  };
  return maps[payload.task] ?? payload.probs.map((_, i) => `class ${i}`);
}

export function detailView(record: ImageRecord, result: ResultRow | null,
                           scale: number, imageUrl: string): string {
  if (result === null) {
    const state = record.status === "failed"
      ? `<p class="failed">failed: ${esc(record.failure_reason)}</p>`
      : `<p class="pending">pending…</p>`;
    return `<div class="detail">${state}
      <img src="${esc(imageUrl)}" width="${record.width_px * scale}"></div>`;
  }
  let body: string;
  const payload = result.payload;
  if (Array.isArray(payload)) {
    const boxes = overlayRects(payload, scale).map((r) => `
      <div class="det-box" style="left:${r.left}px;top:${r.top}px;width:${r.width}px;height:${r.height}px">
        <span class="det-score">apple ${pct(r.score)}</span>
      </div>`).join("");
    body = `<div class="overlay-frame" style="position:relative">
      <img src="${esc(imageUrl)}" width="${record.width_px * scale}">
      ${boxes}
    </div>
    <p>${payload.length} apple(s) detected</p>`;
  } else {
    body = `${classificationDetail(payload)}
      <img src="${esc(imageUrl)}" width="${record.width_px * scale}">`;
  }
  return `<div class="detail">
    <h3>${esc(record.image_id)} — ${esc(result.task)}</h3>
    ${body}
    <p class="meta-line">model ${esc(result.model_version)}, ${result.latency_ms.toFixed(1)} ms</p>
  </div>`;
}

export function statsView(stats: Stats): string {
  if (stats.ingested === 0) {
    return `<p class="empty">Nothing ingested yet — waiting for captures.</p>`;
  }
  const taskRows = Object.entries(stats.per_task)
    .map(([task, n]) => `<tr><td>${esc(task)}</td><td>${n}</td></tr>`).join("");
  const classRows = Object.entries(stats.per_class)
    .map(([label, n]) => `<tr><td>${esc(label)}</td><td>${n}</td></tr>`).join("");
  return `<div class="stats">
    <div class="counters">
      <span>ingested ${stats.ingested}</span>
      <span>processed ${stats.processed}</span>
      <span>queue ${stats.queue_depth}</span>
      <span class="failures">failures ${stats.failures}</span>
    </div>
    <table class="per-task"><caption>per task</caption>${taskRows}</table>
    <table class="per-class"><caption>per class</caption>${classRows}</table>
  </div>`;
}

export function bannerView(message: string): string {
  return `<div class="banner">${esc(message)} <button data-retry>retry</button></div>`;
}
