/**
 * History chart: one SVG, no chart library.
 *
 * The point of the chart is provenance, not prettiness. Each region of
 * the queried range gets a background band telling the operator where
 * those bytes came from (band-archive: ledger-anchored object, verified
 * by digest; band-tsdb: the aggregator's live store). Series lines and
 * violation markers draw on top.
 */

import type { HistoryView } from "./api";

const MARGIN = { top: 10, right: 12, bottom: 24, left: 48 };
const SERIES_COLORS = ["#4c9be8", "#e8a33d", "#58b368", "#b37fd4", "#d46a6a"];

const SVG_NS = "http://www.w3.org/2000/svg";

export function formatSimTime(ms: number): string {
  const total = Math.floor(ms / 1000);
  const h = Math.floor(total / 3600);
  const m = Math.floor((total % 3600) / 60);
  const s = total % 60;
  const mm = String(m).padStart(2, "0");
  const ss = String(s).padStart(2, "0");
  return `${h}:${mm}:${ss}`;
}

export function renderHistoryChart(
  doc: Document,
  view: HistoryView,
  width = 640,
  height = 240,
): SVGSVGElement {
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("class", "history-chart");

  const x0 = MARGIN.left;
  const x1 = width - MARGIN.right;
  const y0 = height - MARGIN.bottom;
  const y1 = MARGIN.top;
  const span = Math.max(1, view.to - view.from);
  const sx = (t: number) => x0 + ((t - view.from) / span) * (x1 - x0);

  // value domain over all series, padded so flat lines stay visible
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of view.samples) {
    if (s.value < lo) lo = s.value;
    if (s.value > hi) hi = s.value;
  }
  if (lo > hi) {
    lo = 0;
    hi = 1;
  }
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const pad = (hi - lo) * 0.08;
  lo -= pad;
  hi += pad;
  const sy = (v: number) => y0 - ((v - lo) / (hi - lo)) * (y0 - y1);

  // provenance bands first so everything else draws over them
  for (const source of view.sources) {
    const rect = doc.createElementNS(SVG_NS, "rect");
    rect.setAttribute("class", `band band-${source.origin}`);
    rect.setAttribute("x", num(sx(source.from)));
    rect.setAttribute("y", String(y1));
    rect.setAttribute("width", num(Math.max(0, sx(source.to) - sx(source.from))));
    rect.setAttribute("height", String(y0 - y1));
    rect.setAttribute("data-origin", source.origin);
    if (source.window_index !== undefined) {
      rect.setAttribute("data-window", String(source.window_index));
    }
    svg.appendChild(rect);
  }

  // axes
  const axis = doc.createElementNS(SVG_NS, "g");
  axis.setAttribute("class", "axis");
  for (let i = 0; i <= 4; i++) {
    const t = view.from + (span * i) / 4;
    const label = doc.createElementNS(SVG_NS, "text");
    label.setAttribute("x", num(sx(t)));
    label.setAttribute("y", String(height - 6));
    label.setAttribute("text-anchor", i === 0 ? "start" : i === 4 ? "end" : "middle");
    label.textContent = formatSimTime(t);
    axis.appendChild(label);

    const v = lo + ((hi - lo) * i) / 4;
    const ylabel = doc.createElementNS(SVG_NS, "text");
    ylabel.setAttribute("x", String(x0 - 6));
    ylabel.setAttribute("y", num(sy(v) + 3));
    ylabel.setAttribute("text-anchor", "end");
    ylabel.textContent = v.toFixed(1);
    axis.appendChild(ylabel);
  }
  svg.appendChild(axis);

  // one polyline per attribute, samples already sorted by timestamp
  const byAttribute = new Map<string, string[]>();
  for (const s of view.samples) {
    let points = byAttribute.get(s.attribute);
    if (!points) {
      points = [];
      byAttribute.set(s.attribute, points);
    }
    points.push(`${num(sx(s.timestamp))},${num(sy(s.value))}`);
  }
  const attributes = [...byAttribute.keys()].sort();
  attributes.forEach((attribute, i) => {
    const line = doc.createElementNS(SVG_NS, "polyline");
    line.setAttribute("class", "series");
    line.setAttribute("data-attribute", attribute);
    line.setAttribute("points", byAttribute.get(attribute)!.join(" "));
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", SERIES_COLORS[i % SERIES_COLORS.length]!);
    line.setAttribute("stroke-width", "1.5");
    svg.appendChild(line);
  });

  // violation markers, colored by criticality
  for (const event of view.events) {
    const mark = doc.createElementNS(SVG_NS, "circle");
    mark.setAttribute("class", `mark crit-${event.criticality}`);
    mark.setAttribute("cx", num(sx(event.timestamp)));
    mark.setAttribute("cy", num(sy(event.value)));
    mark.setAttribute("r", "3");
    svg.appendChild(mark);
  }

  if (view.samples.length === 0) {
    const note = doc.createElementNS(SVG_NS, "text");
    note.setAttribute("class", "empty-note");
    note.setAttribute("x", num((x0 + x1) / 2));
    note.setAttribute("y", num((y0 + y1) / 2));
    note.setAttribute("text-anchor", "middle");
    note.textContent = "no samples in range";
    svg.appendChild(note);
  }

  return svg;
}

function num(value: number): string {
  return String(Math.round(value * 100) / 100);
}
