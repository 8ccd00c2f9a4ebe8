import { STYLE } from "./style.js";

/** Deterministic number formatting for SVG geometry. */
export function fmt(x: number): string {
  const s = x.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface Scale {
  (x: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const f = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  return f;
}

/** Nice tick positions: 1/2/5 steps covering the domain. */
export function ticks(domain: [number, number], count = STYLE.tickCount): number[] {
  const [lo, hi] = domain;
  const span = hi - lo;
  if (span <= 0) return [lo];
  const raw = span / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

function tickLabel(v: number): string {
  const a = Math.abs(v);
  if (a !== 0 && (a < 1e-3 || a >= 1e4)) return v.toExponential(1);
  return parseFloat(v.toPrecision(6)).toString();
}

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color: string;
  dashed?: boolean;
}

export interface PanelSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  /** fixed y-domain, else padded data extent */
  yDomain?: [number, number];
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}

export function renderPanel(spec: PanelSpec, x0: number, y0: number): string {
  const { margin } = STYLE;
  const innerW = STYLE.panelWidth - margin.left - margin.right;
  const innerH = STYLE.panelHeight - margin.top - margin.bottom;

  const xs = spec.series.flatMap((s) => s.x);
  const xDom = extent(xs);
  let yDom = spec.yDomain;
  if (!yDom) {
    const [lo, hi] = extent(spec.series.flatMap((s) => s.y));
    const pad = (hi - lo || 1) * 0.06;
    yDom = [lo - pad, hi + pad];
  }
  const sx = linearScale(xDom, [0, innerW]);
  const sy = linearScale(yDom, [innerH, 0]);

  const parts: string[] = [];
  parts.push(`<g transform="translate(${fmt(x0 + margin.left)},${fmt(y0 + margin.top)})" class="panel">`);

  for (const t of ticks(yDom)) {
    const y = sy(t);
    parts.push(
      `<line x1="0" y1="${fmt(y)}" x2="${fmt(innerW)}" y2="${fmt(y)}" stroke="${STYLE.gridColor}" stroke-width="0.6"/>`,
    );
    parts.push(
      `<text x="-7" y="${fmt(y + 3)}" text-anchor="end" font-size="${STYLE.fontSize}">${tickLabel(t)}</text>`,
    );
  }
  for (const t of ticks(xDom)) {
    const x = sx(t);
    parts.push(
      `<line x1="${fmt(x)}" y1="${fmt(innerH)}" x2="${fmt(x)}" y2="${fmt(innerH + 4)}" stroke="${STYLE.axisColor}" stroke-width="0.8"/>`,
    );
    parts.push(
      `<text x="${fmt(x)}" y="${fmt(innerH + 16)}" text-anchor="middle" font-size="${STYLE.fontSize}">${tickLabel(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="0" y="0" width="${fmt(innerW)}" height="${fmt(innerH)}" fill="none" stroke="${STYLE.axisColor}" stroke-width="1"/>`,
  );

  for (const s of spec.series) {
    const pts = s.x.map((xv, i) => `${fmt(sx(xv))},${fmt(sy(s.y[i]))}`).join(" ");
    const dash = s.dashed ? ` stroke-dasharray="${STYLE.dash}"` : "";
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${s.color}" stroke-width="${STYLE.lineWidth}"${dash}/>`,
    );
  }

  parts.push(
    `<text x="${fmt(innerW / 2)}" y="-12" text-anchor="middle" font-size="${STYLE.titleSize}" font-weight="bold">${esc(spec.title)}</text>`,
  );
  parts.push(
    `<text x="${fmt(innerW / 2)}" y="${fmt(innerH + 32)}" text-anchor="middle" font-size="${STYLE.fontSize}">${esc(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text transform="translate(${fmt(-margin.left + 14)},${fmt(innerH / 2)}) rotate(-90)" text-anchor="middle" font-size="${STYLE.fontSize}">${esc(spec.yLabel)}</text>`,
  );

  // legend, top-left inside the frame
  spec.series.forEach((s, i) => {
    const ly = 12 + i * 13;
    const dash = s.dashed ? ` stroke-dasharray="${STYLE.dash}"` : "";
    parts.push(
      `<line x1="6" y1="${fmt(ly - 3)}" x2="26" y2="${fmt(ly - 3)}" stroke="${s.color}" stroke-width="${STYLE.lineWidth}"${dash}/>`,
    );
    parts.push(`<text x="30" y="${fmt(ly)}" font-size="${STYLE.fontSize - 1}">${esc(s.label)}</text>`);
  });

  parts.push("</g>");
  return parts.join("\n");
}

/** Assemble panels in a grid into a standalone SVG document. */
export function renderFigure(
  panels: PanelSpec[],
  columns: number,
  meta: { figure: string; plottedSha256: string },
): string {
  const rows = Math.ceil(panels.length / columns);
  const width = columns * STYLE.panelWidth + (columns - 1) * STYLE.gap;
  const height = rows * STYLE.panelHeight + (rows - 1) * STYLE.gap;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="${STYLE.fontFamily}" ` +
      `data-figure="${esc(meta.figure)}" data-plotted-sha256="${meta.plottedSha256}">`,
  );
  parts.push(`<rect width="100%" height="100%" fill="${STYLE.background}"/>`);
  panels.forEach((p, i) => {
    const col = i % columns;
    const row = Math.floor(i / columns);
    parts.push(renderPanel(p, col * (STYLE.panelWidth + STYLE.gap), row * (STYLE.panelHeight + STYLE.gap)));
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
