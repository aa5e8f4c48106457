import { lineChart } from "./charts.js";
import type { ContextResponse, TriageSubmission } from "./types.js";

/** Draft of the label form; everything optional until validated. */
export interface LabelDraft {
  verdict?: string;
  rank?: string; // raw field value; "" means unset
  note?: string;
  rater?: string;
}

export type ValidationResult =
  | { ok: true; submission: Omit<TriageSubmission, "indicator" | "region_id" | "date"> }
  | { ok: false; error: string };

/** Rank is required for worth_investigating, optional on dismissal. */
export function validateDraft(draft: LabelDraft): ValidationResult {
  if (!draft.rater || !draft.rater.trim()) {
    return { ok: false, error: "reviewer name is required" };
  }
  if (draft.verdict !== "worth_investigating" && draft.verdict !== "dismissed") {
    return { ok: false, error: "pick a verdict" };
  }
  let rank: number | undefined;
  if (draft.rank !== undefined && draft.rank !== "") {
    rank = Number(draft.rank);
    if (!Number.isInteger(rank) || rank < 1 || rank > 5) {
      return { ok: false, error: "rank must be an integer from 1 to 5" };
    }
  } else if (draft.verdict === "worth_investigating") {
    return { ok: false, error: "rank is required when marking worth investigating" };
  }
  return {
    ok: true,
    submission: {
      rater: draft.rater.trim(),
      verdict: draft.verdict,
      ...(rank !== undefined ? { rank } : {}),
      ...(draft.note ? { note: draft.note } : {}),
    },
  };
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function section(title: string, role: string, charts: string[]): string {
  const body = charts.length ? charts.join("") : `<p class="empty">none</p>`;
  return `<section class="context-section" data-section="${role}"><h3>${title}</h3><div class="charts">${body}</div></section>`;
}

/** Charts for the target and its relatives, evaluated day highlighted. */
export function renderContextHtml(ctx: ContextResponse, draft: LabelDraft = {}): string {
  const highlight = ctx.date;
  const target = lineChart(ctx.target, { highlightDate: highlight, role: "target-chart", width: 520, height: 130 });
  const parents = ctx.parents.map((s) => lineChart(s, { highlightDate: highlight, role: "parent-chart" }));
  const siblings = ctx.siblings.map((s) => lineChart(s, { highlightDate: highlight, role: "sibling-chart" }));
  const children = ctx.children.map((s) => lineChart(s, { highlightDate: highlight, role: "child-chart" }));

  return (
    `<div class="context" data-indicator="${escapeHtml(ctx.indicator)}" data-region="${escapeHtml(ctx.target.region_id)}" data-date="${escapeHtml(ctx.date)}">` +
    `<h2>${escapeHtml(ctx.target.region_id)} &middot; ${escapeHtml(ctx.indicator)} &middot; ${escapeHtml(ctx.date)}</h2>` +
    section("Target", "target", [target]) +
    section("Parents", "parents", parents) +
    section("Siblings", "siblings", siblings) +
    section("Children", "children", children) +
    renderLabelForm(draft) +
    `</div>`
  );
}

export function renderLabelForm(draft: LabelDraft = {}): string {
  const rank = draft.rank ?? "";
  const note = draft.note ?? "";
  const rater = draft.rater ?? "";
  const checked = (v: string) => (draft.verdict === v ? " checked" : "");
  return (
    `<form class="label-form" data-role="label-form">` +
    `<label>reviewer <input name="rater" value="${escapeHtml(rater)}" required></label>` +
    `<fieldset><legend>verdict</legend>` +
    `<label><input type="radio" name="verdict" value="worth_investigating"${checked("worth_investigating")}> worth investigating</label>` +
    `<label><input type="radio" name="verdict" value="dismissed"${checked("dismissed")}> dismissed</label>` +
    `</fieldset>` +
    `<label>rank (5 = most important) <input name="rank" inputmode="numeric" value="${escapeHtml(rank)}" placeholder="1-5"></label>` +
    `<label>note <textarea name="note">${escapeHtml(note)}</textarea></label>` +
    `<button type="submit">save</button>` +
    `<p class="form-error" data-role="form-error" hidden></p>` +
    `</form>`
  );
}
