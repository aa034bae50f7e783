import type { ViewModel } from "./model.js";
import { DRAFT_FIELDS, type DraftField, type TriStateValue } from "./types.js";

export type BadgeKind = "value" | "null" | "none";

/** Exhaustive tri-state mapping: a field renders exactly one badge kind. */
export function badgeKind(value: TriStateValue): BadgeKind {
  if (value === null) {
    return "null";
  }
  if (value === "None") {
    return "none";
  }
  return "value";
}

/** Verbatim display text: the parsed response value, nothing invented. */
export function badgeText(value: TriStateValue): string {
  if (value === null) {
    return "null";
  }
  return typeof value === "string" ? value : JSON.stringify(value);
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderDraftPanel(model: ViewModel): string {
  const rows = DRAFT_FIELDS.map((field: DraftField) => {
    const value = model.draft ? model.draft[field] : null;
    const kind = badgeKind(value);
    const pending = model.pendingField === field ? " pending" : "";
    return (
      `<tr class="field-row${pending}" data-field="${field}">` +
      `<th>${field}</th>` +
      `<td><span class="badge badge-${kind}">${escapeHtml(badgeText(value))}</span></td>` +
      `</tr>`
    );
  });
  return `<table class="draft-panel">${rows.join("")}</table>`;
}

export function renderBubbles(model: ViewModel): string {
  const items = model.bubbles.map(
    (bubble) => `<div class="bubble bubble-${bubble.who}">${escapeHtml(bubble.text)}</div>`,
  );
  return items.join("");
}

export function renderBanner(model: ViewModel): string {
  if (model.banner.kind === "none") {
    return "";
  }
  return `<div class="banner banner-${model.banner.kind}">${escapeHtml(model.banner.text)}</div>`;
}

export function renderExecuteButton(model: ViewModel): string {
  const disabled = model.executeEnabled && !model.executing ? "" : " disabled";
  return `<button id="execute" class="execute"${disabled}>Execute order</button>`;
}

export function renderPortfolio(model: ViewModel): string {
  const symbols = Object.keys(model.positions).sort();
  if (symbols.length === 0) {
    return `<table class="portfolio"><tr><td class="empty">no positions</td></tr></table>`;
  }
  const rows = symbols.map(
    (symbol) =>
      `<tr data-symbol="${symbol}"><td>${symbol}</td><td>${model.positions[symbol]}</td></tr>`,
  );
  return `<table class="portfolio"><tr><th>symbol</th><th>position</th></tr>${rows.join("")}</table>`;
}

export function renderStatusLine(model: ViewModel): string {
  const note = model.awaitingReply ? " (waiting for the assistant...)" : "";
  return `<span class="status">${escapeHtml(model.state + note)}</span>`;
}
