import { GatewayClient, GatewayError } from "./api.js";
import { renderContextHtml, validateDraft, type LabelDraft } from "./context.js";
import {
  applyAck,
  buildQueue,
  markPending,
  renderQueueHtml,
  revertPending,
  type ReviewQueueItem,
} from "./queue.js";
import { ReviewSession } from "./session.js";
import { pointKey } from "./types.js";

const params = new URLSearchParams(window.location.search);
const gatewayUrl = params.get("gateway") ?? "http://127.0.0.1:8004";
const client = new GatewayClient(gatewayUrl);
const session = new ReviewSession();

const queueEl = document.getElementById("queue")!;
const contextEl = document.getElementById("context")!;
const bannerEl = document.getElementById("banner")!;
const dateInput = document.getElementById("date") as HTMLInputElement;
const loadButton = document.getElementById("load")!;
const exportButton = document.getElementById("export-session")!;

let items: ReviewQueueItem[] = [];
let openItem: ReviewQueueItem | null = null;

function showBanner(message: string, retry: () => void): void {
  bannerEl.innerHTML = "";
  bannerEl.hidden = false;
  const text = document.createElement("span");
  text.textContent = message;
  const button = document.createElement("button");
  button.textContent = "retry";
  button.addEventListener("click", () => {
    bannerEl.hidden = true;
    retry();
  });
  bannerEl.append(text, button);
}

function redrawQueue(): void {
  queueEl.innerHTML = renderQueueHtml(items);
  for (const row of queueEl.querySelectorAll<HTMLTableRowElement>("tr.queue-row")) {
    row.addEventListener("click", () => {
      const key = row.dataset.key!;
      const item = items.find((i) => pointKey(i.point) === key);
      if (item) void openContext(item);
    });
  }
}

async function loadQueue(): Promise<void> {
  const date = dateInput.value;
  if (!date) return;
  try {
    const response = await client.fetchRankings(date, 25);
    items = buildQueue(response);
    redrawQueue();
    contextEl.innerHTML = "";
  } catch (err) {
    // no stale data: clear the view and offer a retry
    items = [];
    queueEl.innerHTML = "";
    contextEl.innerHTML = "";
    showBanner(`could not load rankings: ${(err as Error).message}`, () => void loadQueue());
  }
}

async function openContext(item: ReviewQueueItem): Promise<void> {
  const p = item.point;
  session.openItem(pointKey(p));
  openItem = item;
  try {
    const ctx = await client.fetchContext(p.indicator, p.region_id, p.date, 28);
    drawContext(ctx, {});
  } catch (err) {
    showBanner(`could not load context: ${(err as Error).message}`, () => void openContext(item));
  }
}

function drawContext(ctx: Parameters<typeof renderContextHtml>[0], draft: LabelDraft): void {
  contextEl.innerHTML = renderContextHtml(ctx, draft);
  const form = contextEl.querySelector<HTMLFormElement>("form.label-form")!;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void submitLabel(ctx, form);
  });
}

async function submitLabel(
  ctx: Parameters<typeof renderContextHtml>[0],
  form: HTMLFormElement,
): Promise<void> {
  const data = new FormData(form);
  const draft: LabelDraft = {
    rater: String(data.get("rater") ?? ""),
    verdict: data.get("verdict") ? String(data.get("verdict")) : undefined,
    rank: String(data.get("rank") ?? ""),
    note: String(data.get("note") ?? ""),
  };
  const errorEl = form.querySelector<HTMLElement>('[data-role="form-error"]')!;
  const verdictCheck = validateDraft(draft);
  if (!verdictCheck.ok) {
    errorEl.textContent = verdictCheck.error;
    errorEl.hidden = false;
    return;
  }
  const key = pointKey({
    indicator: ctx.indicator,
    region_id: ctx.target.region_id,
    date: ctx.date,
  });
  const submitButton = form.querySelector("button")!;
  submitButton.disabled = true;
  markPending(items, key);
  redrawQueue();
  try {
    await client.submitLabel({
      indicator: ctx.indicator,
      region_id: ctx.target.region_id,
      date: ctx.date,
      ...verdictCheck.submission,
    });
    session.recordLabel();
    const refreshed = await client.fetchLabels(ctx.date);
    const mine = refreshed.labels
      .filter((l) => l.region_id === ctx.target.region_id && l.indicator === ctx.indicator)
      .sort((a, b) => b.seq - a.seq)[0];
    if (mine) applyAck(items, key, mine);
    redrawQueue();
    errorEl.hidden = true;
  } catch (err) {
    // failure re-enables the form with the draft intact
    revertPending(items, key);
    redrawQueue();
    drawContext(ctx, draft);
    const freshError = contextEl.querySelector<HTMLElement>('[data-role="form-error"]')!;
    freshError.textContent =
      err instanceof GatewayError ? err.message : `submit failed: ${(err as Error).message}`;
    freshError.hidden = false;
  } finally {
    submitButton.disabled = false;
  }
}

loadButton.addEventListener("click", () => void loadQueue());
exportButton.addEventListener("click", () => {
  const blob = new Blob([session.exportJson()], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = "review-session.json";
  a.click();
  URL.revokeObjectURL(url);
});

void (async () => {
  try {
    const health = await fetch(`${gatewayUrl}/api/health`).then((r) => r.json());
    if (health.latest_day !== null && !dateInput.value) {
      dateInput.placeholder = "YYYY-MM-DD";
    }
  } catch {
    showBanner("gateway is not reachable", () => window.location.reload());
  }
})();
