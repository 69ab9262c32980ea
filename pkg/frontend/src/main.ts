// Browser entry: hash-routed single page wiring the API client to the
// pure view functions. No client-side inference, no write paths.

import { ApiClient } from "./api";
import { displayScale } from "./overlay";
import { bannerView, detailView, feedView, statsView } from "./views";

const MAX_DISPLAY_WIDTH = 800;

const api = new ApiClient("");
const root = document.getElementById("app");

async function renderFeed(container: HTMLElement) {
  const page = await api.listImages({ limit: 50 });
  container.innerHTML = feedView(page.images);
}

async function renderDetail(container: HTMLElement, imageId: string) {
  const page = await api.listImages({ limit: 1, since: prevId(imageId) });
  const record = page.images.find((r) => r.image_id === imageId);
  if (!record) {
    container.innerHTML = bannerView(`capture ${imageId} not found`);
    return;
  }
  const result = await api.getResult(imageId);
  const scale = displayScale(record.width_px, MAX_DISPLAY_WIDTH);
  container.innerHTML = detailView(record, result, scale, api.imageFileUrl(imageId));
}

// list_images pages are "strictly after" a cursor; the id just below ours
// makes the record itself the first row
function prevId(imageId: string): string {
  return imageId.slice(0, -1) + String.fromCharCode(imageId.charCodeAt(imageId.length - 1) - 1);
}

async function renderStats(container: HTMLElement) {
  container.innerHTML = statsView(await api.getStats());
}

async function render() {
  if (!root) return;
  const hash = window.location.hash;
  try {
    if (hash.startsWith("#detail/")) {
      await renderDetail(root, hash.slice("#detail/".length));
    } else if (hash === "#stats") {
      await renderStats(root);
    } else {
      await renderFeed(root);
    }
  } catch (e) {
    root.innerHTML = bannerView(`API unreachable: ${e}`);
  }
}

if (root) {
  window.addEventListener("hashchange", render);
  root.addEventListener("click", (ev) => {
    if ((ev.target as HTMLElement).hasAttribute("data-retry")) void render();
  });
  api.subscribe(() => void render());
  void render();
}
