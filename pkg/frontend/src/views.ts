/** HTML string renderers for the three console views.
 *
 * Rendering is DOM-free on purpose: every view is a pure function from API
 * payloads to markup, so the display can be asserted against the payload
 * field by field.  Nothing here recomputes scores, rates or control limits.
 */

import { ConsoleState } from "./state.js";
import { GatewayEvent, ReportResponse, SpcResponse } from "./types.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmtTime(ts: number): string {
  return new Date(ts * 1000).toISOString();
}

export function renderConnectionStatus(state: ConsoleState): string {
  return `<span class="status status-${state.connection}">${state.connection}</span>`;
}

export function renderEventRow(e: GatewayEvent): string {
  const cls = e.kind === "alert" ? "event-row alert" : "event-row";
  const score = e.fused_score === null ? "" : String(e.fused_score);
  return (
    `<tr class="${cls}" data-event-id="${e.event_id}">` +
    `<td>${e.event_id}</td><td>${fmtTime(e.timestamp)}</td>` +
    `<td>${escapeHtml(e.kind)}</td><td>${escapeHtml(e.door_id ?? "")}</td>` +
    `<td>${escapeHtml(e.subject_id ?? "")}</td><td>${score}</td></tr>`
  );
}

export function renderEventFeed(state: ConsoleState): string {
  const rows = state.events.map(renderEventRow).join("");
  return (
    `<table class="event-feed"><thead><tr>` +
    `<th>id</th><th>time</th><th>kind</th><th>door</th><th>subject</th><th>score</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

/** Banner listing unacknowledged alerts; empty string when there are none. */
export function renderAlertBanner(state: ConsoleState): string {
  const pending = state.unacknowledgedAlerts;
  if (pending.length === 0) {
    return "";
  }
  const buttons = pending
    .map((id) => `<button class="ack" data-alert-id="${id}">ack #${id}</button>`)
    .join(" ");
  return `<div class="alert-banner">${pending.length} unacknowledged alert(s) ${buttons}</div>`;
}

export function renderEnrollSuccess(subjectId: string, templates: number): string {
  return (
    `<div class="banner banner-ok">enrolled ${escapeHtml(subjectId)} ` +
    `with ${templates} template(s)</div>`
  );
}

export function renderFormErrors(errors: string[]): string {
  const items = errors.map((e) => `<li>${escapeHtml(e)}</li>`).join("");
  return `<ul class="form-errors">${items}</ul>`;
}

export function renderServerError(detail: string): string {
  return `<div class="banner banner-error">${escapeHtml(detail)}</div>`;
}

export function renderReport(report: ReportResponse): string {
  const doorRows: string[] = [];
  for (const door of Object.keys(report.door_counts).sort()) {
    const kinds = report.door_counts[door];
    for (const kind of Object.keys(kinds).sort()) {
      doorRows.push(
        `<tr><td>${escapeHtml(door)}</td><td>${escapeHtml(kind)}</td><td>${kinds[kind]}</td></tr>`,
      );
    }
  }
  const maxFlow = Math.max(1, ...report.flow);
  const bars = report.flow
    .map((n, hour) => {
      const width = Math.round((100 * n) / maxFlow);
      return (
        `<div class="flow-bar" data-hour="${hour}" data-count="${n}">` +
        `<span style="width:${width}%"></span>${n}</div>`
      );
    })
    .join("");
  const totals = Object.keys(report.totals)
    .sort()
    .map((k) => `<tr><td>${escapeHtml(k)}</td><td>${report.totals[k]}</td></tr>`)
    .join("");
  return (
    `<section class="report" data-from="${report.from}" data-to="${report.to}">` +
    `<table class="door-counts"><thead><tr><th>door</th><th>kind</th><th>count</th></tr></thead>` +
    `<tbody>${doorRows.join("")}</tbody></table>` +
    `<div class="flow-histogram">${bars}</div>` +
    `<table class="totals"><tbody>${totals}</tbody></table>` +
    `</section>`
  );
}

/** SPC chart as inline SVG: score series, mean and UCL/LCL lines, flagged
 * points rendered as a distinct marker series. */
export function renderSpcChart(spc: SpcResponse, width = 600, height = 200): string {
  const values = spc.points.map(([, v]) => v);
  const lo = Math.min(spc.lcl, ...values);
  const hi = Math.max(spc.ucl, ...values);
  const span = hi - lo || 1;
  const x = (i: number) =>
    spc.points.length > 1 ? (i * width) / (spc.points.length - 1) : width / 2;
  const y = (v: number) => height - ((v - lo) / span) * height;

  const line = (v: number, cls: string) =>
    `<line class="${cls}" x1="0" y1="${y(v)}" x2="${width}" y2="${y(v)}"/>`;
  const markers = spc.points
    .map(([eventId, v, flagged], i) => {
      const cls = flagged ? "spc-point flagged" : "spc-point";
      return `<circle class="${cls}" data-event-id="${eventId}" cx="${x(i)}" cy="${y(v)}" r="3"/>`;
    })
    .join("");
  return (
    `<svg class="spc-chart" viewBox="0 0 ${width} ${height}" data-mean="${spc.mean}" ` +
    `data-ucl="${spc.ucl}" data-lcl="${spc.lcl}">` +
    line(spc.mean, "spc-mean") +
    line(spc.ucl, "spc-ucl") +
    line(spc.lcl, "spc-lcl") +
    markers +
    `</svg>`
  );
}
