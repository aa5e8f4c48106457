import type { RankedPoint, RankingsResponse, TriageStatus } from "./types.js";
import { pointKey } from "./types.js";

export type ItemStatus = "unlabeled" | "pending" | "labeled";

export interface ReviewQueueItem {
  position: number; // 1-based position in today's queue
  point: RankedPoint;
  status: ItemStatus;
  triage: TriageStatus | null;
}

/** Queue items in exactly the gateway's order; the client never re-sorts. */
export function buildQueue(response: RankingsResponse): ReviewQueueItem[] {
  return response.points.map((point, i) => ({
    position: i + 1,
    point,
    status: point.triage ? "labeled" : "unlabeled",
    triage: point.triage,
  }));
}

function find(items: ReviewQueueItem[], key: string): ReviewQueueItem | undefined {
  return items.find((item) => pointKey(item.point) === key);
}

/** Optimistic submit: mark now, reconcile with the ack (or revert). */
export function markPending(items: ReviewQueueItem[], key: string): void {
  const item = find(items, key);
  if (item) item.status = "pending";
}

export function applyAck(items: ReviewQueueItem[], key: string, triage: TriageStatus): void {
  const item = find(items, key);
  if (item) {
    item.status = "labeled";
    item.triage = triage;
  }
}

export function revertPending(items: ReviewQueueItem[], key: string): void {
  const item = find(items, key);
  if (item && item.status === "pending") {
    item.status = item.triage ? "labeled" : "unlabeled";
  }
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

/** Labeled rows are visually distinguished but never hidden. */
export function renderQueueHtml(items: ReviewQueueItem[]): string {
  const rows = items.map((item) => {
    const p = item.point;
    const key = escapeHtml(pointKey(p));
    const badge =
      item.status === "labeled" && item.triage
        ? `<span class="badge ${item.triage.verdict}">${item.triage.verdict === "worth_investigating" ? "investigate" : "dismissed"}</span>`
        : item.status === "pending"
          ? `<span class="badge pending">saving&hellip;</span>`
          : "";
    return (
      `<tr class="queue-row ${item.status}" data-key="${key}">` +
      `<td class="pos">${item.position}</td>` +
      `<td class="score">${p.score.toFixed(4)}</td>` +
      `<td class="indicator">${escapeHtml(p.indicator)}</td>` +
      `<td class="region">${escapeHtml(p.region_id)}</td>` +
      `<td class="date">${escapeHtml(p.date)}</td>` +
      `<td class="status">${badge}</td>` +
      `</tr>`
    );
  });
  return (
    `<table class="queue"><thead><tr>` +
    `<th>#</th><th>score</th><th>indicator</th><th>region</th><th>date</th><th></th>` +
    `</tr></thead><tbody>${rows.join("")}</tbody></table>`
  );
}

/** Region ids in display order, for order-preservation checks. */
export function displayedOrder(html: string): string[] {
  const out: string[] = [];
  const re = /<td class="region">([^<]*)<\/td>/g;
  let match: RegExpExecArray | null;
  while ((match = re.exec(html)) !== null) {
    out.push(match[1] ?? "");
  }
  return out;
}
