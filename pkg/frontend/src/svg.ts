/**
 * Tiny deterministic SVG builder: linear scales, axes, polylines and point
 * markers. Output is plain markup, so identical inputs yield identical
 * bytes.
 */

export interface Extent {
  min: number;
  max: number;
}

export function extent(values: number[], pad = 0.05): Extent {
  let min = Math.min(...values);
  let max = Math.max(...values);
  if (!isFinite(min) || !isFinite(max)) {
    throw new Error("non-finite values in plot data");
  }
  if (min === max) {
    min -= 0.5;
    max += 0.5;
  }
  const span = max - min;
  return { min: min - pad * span, max: max + pad * span };
}

export class LinearScale {
  constructor(
    readonly domain: Extent,
    readonly range: [number, number]
  ) {}

  map(x: number): number {
    const t = (x - this.domain.min) / (this.domain.max - this.domain.min);
    return this.range[0] + t * (this.range[1] - this.range[0]);
  }

  ticks(count = 5): number[] {
    const span = this.domain.max - this.domain.min;
    const rawStep = span / count;
    const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
    const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= count) ?? mag * 10;
    const start = Math.ceil(this.domain.min / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.domain.max + 1e-12; v += step) {
      out.push(Number(v.toPrecision(10)));
    }
    return out;
  }
}

export function fmt(x: number): string {
  if (x === 0) return "0";
  const abs = Math.abs(x);
  if (abs >= 1e4 || abs < 1e-2) return x.toExponential(1);
  return Number(x.toPrecision(4)).toString();
}

export const PALETTE = [
  "#4053d3", "#ddb310", "#b51d14", "#00beff", "#fb49b0", "#00b25d", "#cacaca",
];

export function colorFor(i: number): string {
  return PALETTE[i % PALETTE.length];
}

/** Interpolate from light to saturated for iteration-gradient trajectories. */
export function gradientColor(t: number, hue: number): string {
  const light = 85 - 55 * t;
  return `hsl(${hue}, 70%, ${light.toFixed(0)}%)`;
}

export class SvgCanvas {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number
  ) {}

  add(markup: string): void {
    this.parts.push(markup);
  }

  line(x1: number, y1: number, x2: number, y2: number, style: string): void {
    this.add(
      `<line x1="${r(x1)}" y1="${r(y1)}" x2="${r(x2)}" y2="${r(y2)}" ${style}/>`
    );
  }

  polyline(pts: Array<[number, number]>, style: string): void {
    const d = pts.map(([x, y]) => `${r(x)},${r(y)}`).join(" ");
    this.add(`<polyline points="${d}" fill="none" ${style}/>`);
  }

  polygon(pts: Array<[number, number]>, style: string): void {
    const d = pts.map(([x, y]) => `${r(x)},${r(y)}`).join(" ");
    this.add(`<polygon points="${d}" ${style}/>`);
  }

  circle(x: number, y: number, radius: number, style: string): void {
    this.add(`<circle cx="${r(x)}" cy="${r(y)}" r="${r(radius)}" ${style}/>`);
  }

  text(x: number, y: number, content: string, style = ""): void {
    this.add(`<text x="${r(x)}" y="${r(y)}" ${style}>${escapeXml(content)}</text>`);
  }

  star(x: number, y: number, size: number, style: string): void {
    const pts: Array<[number, number]> = [];
    for (let k = 0; k < 10; k++) {
      const radius = k % 2 === 0 ? size : size * 0.42;
      const angle = (Math.PI / 5) * k - Math.PI / 2;
      pts.push([x + radius * Math.cos(angle), y + radius * Math.sin(angle)]);
    }
    this.polygon(pts, `class="final-star" ${style}`);
  }

  arrowHead(x: number, y: number, dx: number, dy: number, size: number, fill: string): void {
    const len = Math.hypot(dx, dy);
    if (len < 1e-9) return;
    const ux = dx / len;
    const uy = dy / len;
    const left: [number, number] = [x - size * ux + 0.5 * size * uy, y - size * uy - 0.5 * size * ux];
    const right: [number, number] = [x - size * ux - 0.5 * size * uy, y - size * uy + 0.5 * size * ux];
    this.polygon([[x, y], left, right], `class="arrow" fill="${fill}"`);
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
        `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}" ` +
        `font-family="Helvetica, Arial, sans-serif" font-size="11">`,
      `<rect width="${this.width}" height="${this.height}" fill="white"/>`,
      ...this.parts,
      `</svg>`,
      ``,
    ].join("\n");
  }
}

export function drawAxes(
  svg: SvgCanvas,
  x: LinearScale,
  y: LinearScale,
  labels: { x: string; y: string; title?: string }
): void {
  const [x0, x1] = x.range;
  const [y0, y1] = y.range;
  const axisStyle = 'stroke="#333" stroke-width="1"';
  svg.line(x0, y0, x1, y0, axisStyle);
  svg.line(x0, y0, x0, y1, axisStyle);
  for (const t of x.ticks()) {
    const px = x.map(t);
    svg.line(px, y0, px, y0 + 4, axisStyle);
    svg.text(px, y0 + 16, fmt(t), 'text-anchor="middle" fill="#333"');
  }
  for (const t of y.ticks()) {
    const py = y.map(t);
    svg.line(x0 - 4, py, x0, py, axisStyle);
    svg.text(x0 - 7, py + 3, fmt(t), 'text-anchor="end" fill="#333"');
    svg.line(x0, py, x1, py, 'stroke="#eee" stroke-width="0.5"');
  }
  svg.text((x0 + x1) / 2, y0 + 32, labels.x, 'text-anchor="middle" fill="#333"');
  svg.add(
    `<text x="14" y="${r((y0 + y1) / 2)}" text-anchor="middle" fill="#333" ` +
      `transform="rotate(-90 14 ${r((y0 + y1) / 2)})">${escapeXml(labels.y)}</text>`
  );
  if (labels.title) {
    svg.text((x0 + x1) / 2, 18, labels.title, 'text-anchor="middle" font-size="13" fill="#111"');
  }
}

function r(x: number): string {
  return Number(x.toFixed(2)).toString();
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
