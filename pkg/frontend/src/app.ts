import { ApiError, ConsoleApi } from "./api.js";
import { FeedState } from "./feed.js";
import { overlayRect } from "./overlay.js";
import { Poller } from "./poll.js";
import type { Alert, AlertFilters, Device, ReviewVerdict } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function formatTime(ms: number): string {
  return new Date(ms).toLocaleString();
}

function badge(text: string, kind: string): HTMLSpanElement {
  const span = document.createElement("span");
  span.className = `badge badge-${kind}`;
  span.textContent = text;
  return span;
}

const token = new URLSearchParams(location.search).get("token") ?? undefined;
const api = new ConsoleApi({ token });
const feed = new FeedState();

let filters: AlertFilters = {};
let openReportId: string | null = null;
let activeTab: "feed" | "devices" = "feed";

// ---------------------------------------------------------------- images

const imageUrls = new Map<string, string>();

async function setImage(img: HTMLImageElement, reportId: string, kind: "snapshot" | "chip") {
  const key = `${reportId}/${kind}`;
  let url = imageUrls.get(key);
  if (!url) {
    try {
      url = URL.createObjectURL(await api.fetchImage(reportId, kind));
    } catch {
      img.classList.add("broken");
      return;
    }
    imageUrls.set(key, url);
  }
  img.src = url;
}

// ------------------------------------------------------------------ feed

function alertCard(alert: Alert): HTMLElement {
  const card = document.createElement("article");
  card.className = "card";
  card.dataset["reportId"] = alert.report_id;

  const thumb = document.createElement("img");
  thumb.className = "thumb";
  thumb.alt = `snapshot from ${alert.device_id}`;
  void setImage(thumb, alert.report_id, "snapshot");
  card.append(thumb);

  const body = document.createElement("div");
  body.className = "card-body";
  const title = document.createElement("strong");
  title.textContent = `${alert.device_id} · track ${alert.track_id}`;
  const when = document.createElement("div");
  when.className = "muted";
  when.textContent = formatTime(alert.timestamp_ms);
  const badges = document.createElement("div");
  badges.append(badge(alert.disposition, alert.disposition));
  if (alert.review !== "unreviewed") badges.append(badge(alert.review, "review"));
  if (alert.undelivered) badges.append(badge("undelivered", "undelivered"));
  body.append(title, when, badges);
  card.append(body);

  card.addEventListener("click", () => void openDetail(alert.report_id));
  return card;
}

function renderFeed() {
  const snapshot = feed.snapshot();
  el("banner").hidden = snapshot.error === null;
  el("banner-text").textContent = snapshot.error ?? "";
  const list = el("feed-list");
  list.replaceChildren(...snapshot.alerts.map(alertCard));
  el("feed-empty").hidden = !snapshot.loaded || snapshot.alerts.length > 0;
  el("feed-total").textContent = snapshot.loaded ? `${snapshot.total} alert(s)` : "";
  if (openReportId) {
    const open = feed.get(openReportId);
    if (open) renderDetailMeta(open);
  }
}

// ---------------------------------------------------------------- detail

function notice(text: string) {
  const node = el("notice");
  node.textContent = text;
  node.hidden = text === "";
}

function renderDetailMeta(alert: Alert) {
  el("detail-title").textContent = `${alert.device_id} · track ${alert.track_id}`;
  el("detail-meta").textContent =
    `${formatTime(alert.timestamp_ms)} · detector ${alert.detector_score.toFixed(2)}` +
    ` · second stage ${alert.second_stage_score.toFixed(2)} · ${alert.disposition}`;
  const reviewed = alert.review !== "unreviewed";
  el("detail-review").textContent = reviewed
    ? `${alert.review} by ${alert.reviewer ?? "unknown"}`
    : "unreviewed";
  (el("btn-ack") as HTMLButtonElement).disabled = reviewed;
  (el("btn-fp") as HTMLButtonElement).disabled = reviewed;
}

function positionOverlay(alert: Alert) {
  const img = el<HTMLImageElement>("detail-image");
  const box = el("detail-box");
  if (!img.naturalWidth || !img.clientWidth) {
    box.hidden = true;
    return;
  }
  const rect = overlayRect(
    alert.box,
    { width: img.naturalWidth, height: img.naturalHeight },
    { width: img.clientWidth, height: img.clientHeight },
  );
  box.hidden = false;
  box.style.left = `${rect.left}px`;
  box.style.top = `${rect.top}px`;
  box.style.width = `${rect.width}px`;
  box.style.height = `${rect.height}px`;
}

async function openDetail(reportId: string) {
  notice("");
  let alert: Alert;
  try {
    alert = await api.getAlert(reportId);
  } catch (error) {
    if (error instanceof ApiError && error.status === 404) {
      closeDetail();
      notice("alert no longer exists");
      return;
    }
    throw error;
  }
  openReportId = reportId;
  feed.upsert(alert);
  el("detail").hidden = false;
  renderDetailMeta(alert);
  const img = el<HTMLImageElement>("detail-image");
  img.onload = () => positionOverlay(alert);
  el("detail-box").hidden = true;
  void setImage(img, reportId, "snapshot");
}

function closeDetail() {
  openReportId = null;
  el("detail").hidden = true;
}

async function submitReview(verdict: ReviewVerdict) {
  if (!openReportId) return;
  const current = feed.get(openReportId);
  if (!current) return;
  if (
    verdict === "false_positive" &&
    !window.confirm("Mark as false positive? The chip will enter the hard-negative export.")
  ) {
    return;
  }
  // optimistic: flip the badge now, reconcile with the server response
  feed.upsert({ ...current, review: verdict, reviewer: "console" });
  try {
    feed.upsert(await api.review(openReportId, verdict, "console"));
    await refreshHardNegatives();
  } catch (error) {
    if (error instanceof ApiError && error.status === 409) {
      const server = await api.getAlert(openReportId);
      feed.upsert(server);
      notice(`already reviewed by ${server.reviewer ?? "another operator"}`);
      return;
    }
    if (error instanceof ApiError && error.status === 404) {
      closeDetail();
      notice("alert no longer exists");
      return;
    }
    feed.upsert(current);
    notice(error instanceof Error ? error.message : String(error));
  }
}

// --------------------------------------------------------------- devices

function deviceRow(device: Device): HTMLElement {
  const row = document.createElement("div");
  row.className = "device-row";
  const dot = document.createElement("span");
  dot.className = device.online ? "dot online" : "dot offline";
  const name = document.createElement("strong");
  name.textContent = device.name || device.device_id;
  const meta = document.createElement("span");
  meta.className = "muted";
  meta.textContent =
    `${device.online ? "online" : "offline"} · ${device.reports} report(s)` +
    ` · last seen ${formatTime(device.last_seen_ms)}`;
  row.append(dot, name, meta);
  return row;
}

async function renderDevices() {
  const devices = await api.listDevices();
  el("devices-list").replaceChildren(...devices.map(deviceRow));
  el("devices-empty").hidden = devices.length > 0;
}

// ------------------------------------------------------------- dashboard

async function refreshHardNegatives() {
  const negatives = await api.hardNegatives();
  el("hn-count").textContent = String(negatives.count);
}

// ------------------------------------------------------------------ main

async function tick() {
  try {
    feed.applyPage(await api.listAlerts(filters));
    await refreshHardNegatives();
    if (activeTab === "devices") await renderDevices();
  } catch (error) {
    feed.applyError(error instanceof Error ? error.message : String(error));
  }
}

function readFilters(): AlertFilters {
  const device = el<HTMLInputElement>("filter-device").value.trim();
  const disposition = el<HTMLSelectElement>("filter-disposition").value;
  const review = el<HTMLSelectElement>("filter-review").value;
  const next: AlertFilters = {};
  if (device) next.device = device;
  if (disposition) next.disposition = disposition as AlertFilters["disposition"];
  if (review) next.review = review as AlertFilters["review"];
  return next;
}

export function main(): void {
  const poller = new Poller(tick);
  feed.subscribe(renderFeed);

  for (const id of ["filter-device", "filter-disposition", "filter-review"]) {
    el(id).addEventListener("change", () => {
      filters = readFilters();
      void tick();
    });
  }
  el("banner-retry").addEventListener("click", () => void tick());
  el("btn-ack").addEventListener("click", () => void submitReview("acknowledged"));
  el("btn-fp").addEventListener("click", () => void submitReview("false_positive"));
  el("detail-close").addEventListener("click", closeDetail);
  el("tab-feed").addEventListener("click", () => {
    activeTab = "feed";
    el("feed-page").hidden = false;
    el("devices-page").hidden = true;
  });
  el("tab-devices").addEventListener("click", () => {
    activeTab = "devices";
    el("feed-page").hidden = true;
    el("devices-page").hidden = false;
    void renderDevices();
  });

  poller.start();
}

main();
