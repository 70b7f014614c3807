/**
 * Minimal deterministic SVG chart primitives: fixed styling, fixed
 * number formatting, no timestamps, so identical inputs give identical
 * bytes.
 */

export const WIDTH = 640;
export const HEIGHT = 400;
export const MARGIN = { left: 64, right: 16, top: 40, bottom: 48 };

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

export function fmt(value: number): string {
  if (!Number.isFinite(value)) throw new Error(`non-finite coordinate ${value}`);
  return Number(value.toFixed(3)).toString();
}

export interface Scale {
  (value: number): number;
  domain: [number, number];
}

export function linearScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [d0, d1] = domain;
  const span = d1 - d0 || 1;
  const scale = ((value: number) =>
    range[0] + ((value - d0) / span) * (range[1] - range[0])) as Scale;
  scale.domain = domain;
  return scale;
}

export function extent(values: number[], padFraction = 0.05): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const pad = (hi - lo) * padFraction;
  return [lo - pad, hi + pad];
}

/** Round ticks covering the domain, about `count` of them. */
export function ticks(domain: [number, number], count = 5): number[] {
  const span = domain[1] - domain[0];
  const rawStep = span / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const step = [1, 2, 5, 10].map((m) => m * mag)
    .find((s) => span / s <= count + 1) ?? 10 * mag;
  const first = Math.ceil(domain[0] / step) * step;
  const out: number[] = [];
  for (let v = first; v <= domain[1] + 1e-9 * step; v += step) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export function polyline(points: [number, number][], stroke: string): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return `<polyline fill="none" stroke="${stroke}" stroke-width="1.5" points="${pts}"/>`;
}

export function bandPolygon(
  upper: [number, number][],
  lower: [number, number][],
  fill: string,
): string {
  const ring = [...upper, ...[...lower].reverse()];
  const pts = ring.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return `<polygon fill="${fill}" fill-opacity="0.2" stroke="none" points="${pts}"/>`;
}

export function axes(
  x: Scale,
  y: Scale,
  xLabel: string,
  yLabel: string,
): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`);
  for (const t of ticks(x.domain)) {
    const px = fmt(x(t));
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="#333"/>`);
    parts.push(`<text x="${px}" y="${y0 + 18}" font-size="11" text-anchor="middle">${fmt(t)}</text>`);
  }
  for (const t of ticks(y.domain)) {
    const py = fmt(y(t));
    parts.push(`<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`);
    parts.push(`<text x="${x0 - 8}" y="${py}" font-size="11" text-anchor="end" dominant-baseline="middle">${fmt(t)}</text>`);
    parts.push(`<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" stroke="#ddd" stroke-dasharray="2,3"/>`);
  }
  parts.push(`<text x="${(x0 + x1) / 2}" y="${HEIGHT - 8}" font-size="12" text-anchor="middle">${xLabel}</text>`);
  parts.push(`<text x="16" y="${(y0 + y1) / 2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 ${(y0 + y1) / 2})">${yLabel}</text>`);
  return parts.join("\n");
}

export function legend(labels: string[], colors: string[]): string {
  return labels.map((label, k) => {
    const y = MARGIN.top + 16 * k;
    const x = WIDTH - MARGIN.right - 150;
    return `<line x1="${x}" y1="${y}" x2="${x + 18}" y2="${y}" stroke="${colors[k]}" stroke-width="2"/>` +
      `<text x="${x + 24}" y="${y + 4}" font-size="11">${label}</text>`;
  }).join("\n");
}

export function document(title: string, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="20" font-size="14" text-anchor="middle">${title}</text>`,
    body,
    `</svg>`,
    ``,
  ].join("\n");
}
