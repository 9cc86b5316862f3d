/** Pure HTML renderers for the elicitation UI.
 *
 * Everything here is schema-driven from the service payloads: attribute
 * names and values are rendered verbatim (escaped, never recomputed), so
 * new domains need no UI changes. These functions return markup strings;
 * main.ts owns the DOM.
 */

import type {
  DomainInfo,
  HistoryEntry,
  QueryOption,
  SessionSummary,
} from "./api.js";

export function escapeHtml(value: unknown): string {
  return String(value)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const COST_HINT = /(price|cost)/i;

export function renderDomainPicker(domains: DomainInfo[]): string {
  const options = domains
    .map((d) => `<option value="${escapeHtml(d.id)}">${escapeHtml(d.id)}</option>`)
    .join("");
  return `
<form id="start-form" class="start">
  <label>Domain <select id="domain">${options}</select></label>
  <label>Options per query <input id="k" type="number" min="2" value="3"></label>
  <label>Iterations <input id="T" type="number" min="1" value="10"></label>
  <button type="submit">Start session</button>
</form>`;
}

export function renderContextPicker(domain: DomainInfo): string {
  if (!domain.contextual || domain.cities.length === 0) {
    return `<button id="next-query" class="next">Next query</button>`;
  }
  const boxes = domain.cities
    .map(
      (c) =>
        `<label><input type="checkbox" name="must-visit" value="${escapeHtml(c)}"> ${escapeHtml(c)}</label>`,
    )
    .join("");
  return `
<fieldset id="context-picker">
  <legend>Must-visit cities</legend>
  ${boxes}
  <button id="next-query" class="next">Next query</button>
</fieldset>`;
}

function renderCard(option: QueryOption, leader: boolean): string {
  const rows = Object.entries(option.values)
    .map(([name, value]) => {
      const cls = COST_HINT.test(name) ? ' class="cost"' : "";
      return `<tr${cls}><th>${escapeHtml(name)}</th><td>${escapeHtml(value)}</td></tr>`;
    })
    .join("");
  return `
<article class="card${leader ? " leader" : ""}" data-index="${option.index}">
  <header>Option ${option.index}${leader ? " (current best guess)" : ""}</header>
  <table>${rows}</table>
  <footer>estimated utility ${option.estimated_utility.toFixed(3)}</footer>
  <button class="choose" data-index="${option.index}">Prefer this one</button>
</article>`;
}

/** Cards in service order: the first card is the model's current optimum. */
export function renderOptionCards(summary: SessionSummary): string {
  const query = summary.query;
  if (!query) return "";
  const cards = query.options
    .map((opt, i) => renderCard(opt, i === 0))
    .join("");
  const label = summary.context?.label
    ? `<p class="context">context: ${escapeHtml(summary.context.label)}</p>`
    : "";
  return `${label}<div class="cards">${cards}</div>`;
}

export function renderHistoryStrip(history: HistoryEntry[]): string {
  if (history.length === 0) return "";
  const chips = history
    .map(
      (h) =>
        `<span class="chip" title="${escapeHtml(h.contextLabel ?? "")}">t${h.t}&rarr;${h.chosen}</span>`,
    )
    .join("");
  return `<div class="history">${chips}</div>`;
}

function polyline(values: number[], width: number, height: number): string {
  const max = Math.max(...values.map(Math.abs), 1e-9);
  const step = values.length > 1 ? width / (values.length - 1) : 0;
  return values
    .map((v, i) => `${(i * step).toFixed(1)},${(height - (height * v) / (2 * max) - height / 2).toFixed(1)}`)
    .join(" ");
}

/** Sparkline of the per-iteration diversity (delta) and estimated quality
 * (mu) diagnostics, with the latest solver status as a caption. */
export function renderDiagnostics(history: HistoryEntry[]): string {
  if (history.length === 0) return "";
  const deltas = history.map((h) => h.diagnostics.delta);
  const mus = history.map((h) => h.diagnostics.mu);
  const status = history[history.length - 1].diagnostics.solver_status;
  return `
<figure class="diagnostics">
  <svg viewBox="0 0 120 40" width="240" height="80">
    <polyline fill="none" stroke="#1f77b4" points="${polyline(deltas, 120, 40)}"/>
    <polyline fill="none" stroke="#ff7f0e" points="${polyline(mus, 120, 40)}"/>
  </svg>
  <figcaption>&delta; (blue) / &mu; (orange), solver: ${escapeHtml(status)}</figcaption>
</figure>`;
}

export function renderFinished(summary: SessionSummary, history: HistoryEntry[]): string {
  return `
<section class="finished">
  <h2>Session finished</h2>
  <p>${history.length} choices recorded over ${summary.t - 1} iterations.</p>
  ${renderHistoryStrip(history)}
  ${renderDiagnostics(history)}
</section>`;
}

export function renderError(message: string): string {
  return `<div class="banner error" role="alert">${escapeHtml(message)}</div>`;
}

export function renderProgress(cutoffSeconds: number | null): string {
  const cap = cutoffSeconds === null ? "" : ` (up to ${cutoffSeconds}s)`;
  return `<div class="banner progress">Solving for the next query${cap}&hellip;</div>`;
}
