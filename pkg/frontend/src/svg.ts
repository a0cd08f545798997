/** Minimal deterministic SVG emission: axes, lines, markers, error bars. */

export interface Extent {
  min: number;
  max: number;
}

export interface Scale {
  domain: Extent;
  range: Extent;
}

export function scaled(scale: Scale, value: number): number {
  const { domain, range } = scale;
  const t = (value - domain.min) / (domain.max - domain.min || 1);
  return range.min + t * (range.max - range.min);
}

const fmt = (x: number) => {
  const s = x.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
};

export interface LineSeries {
  kind: "line";
  name: string;
  color: string;
  points: Array<[number, number]>;
}

export interface MarkerSeries {
  kind: "markers";
  name: string;
  color: string;
  points: Array<{ x: number; y: number; spread?: number; opacity?: number }>;
}

export type Series = LineSeries | MarkerSeries;

export interface Figure {
  width: number;
  height: number;
  xLabel: string;
  yLabel: string;
  xDomain: Extent;
  yDomain: Extent;
  series: Series[];
  title?: string;
}

const MARGIN = { left: 64, right: 16, top: 28, bottom: 48 };

function ticks(domain: Extent, count: number): number[] {
  const step = (domain.max - domain.min) / (count - 1);
  return Array.from({ length: count }, (_, i) => domain.min + i * step);
}

export function renderSvg(fig: Figure): string {
  const plotW = fig.width - MARGIN.left - MARGIN.right;
  const plotH = fig.height - MARGIN.top - MARGIN.bottom;
  const sx: Scale = {
    domain: fig.xDomain,
    range: { min: MARGIN.left, max: MARGIN.left + plotW },
  };
  const sy: Scale = {
    domain: fig.yDomain,
    range: { min: MARGIN.top + plotH, max: MARGIN.top },
  };
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${fig.width}" ` +
      `height="${fig.height}" viewBox="0 0 ${fig.width} ${fig.height}">`,
  );
  parts.push(`<rect width="${fig.width}" height="${fig.height}" fill="white"/>`);
  if (fig.title) {
    parts.push(
      `<text x="${fig.width / 2}" y="18" text-anchor="middle" ` +
        `font-size="13" font-family="sans-serif">${fig.title}</text>`,
    );
  }

  const axisY = MARGIN.top + plotH;
  parts.push(
    `<g class="axes" stroke="black" fill="none">` +
      `<line x1="${MARGIN.left}" y1="${axisY}" x2="${MARGIN.left + plotW}" y2="${axisY}"/>` +
      `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${axisY}"/>` +
      `</g>`,
  );
  const tickParts: string[] = [];
  for (const t of ticks(fig.xDomain, 6)) {
    const x = scaled(sx, t);
    tickParts.push(
      `<line x1="${fmt(x)}" y1="${axisY}" x2="${fmt(x)}" y2="${axisY + 5}" stroke="black"/>` +
        `<text x="${fmt(x)}" y="${axisY + 18}" text-anchor="middle" font-size="10" ` +
        `font-family="sans-serif">${t.toPrecision(3)}</text>`,
    );
  }
  for (const t of ticks(fig.yDomain, 6)) {
    const y = scaled(sy, t);
    tickParts.push(
      `<line x1="${MARGIN.left - 5}" y1="${fmt(y)}" x2="${MARGIN.left}" y2="${fmt(y)}" stroke="black"/>` +
        `<text x="${MARGIN.left - 8}" y="${fmt(y + 3)}" text-anchor="end" font-size="10" ` +
        `font-family="sans-serif">${t.toPrecision(3)}</text>`,
    );
  }
  parts.push(`<g class="ticks">${tickParts.join("")}</g>`);
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${fig.height - 10}" text-anchor="middle" ` +
      `font-size="12" font-family="sans-serif">${fig.xLabel}</text>`,
  );
  parts.push(
    `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="12" ` +
      `font-family="sans-serif" transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">` +
      `${fig.yLabel}</text>`,
  );

  for (const series of fig.series) {
    if (series.kind === "line") {
      const pts = series.points
        .map(([x, y]) => `${fmt(scaled(sx, x))},${fmt(scaled(sy, y))}`)
        .join(" ");
      parts.push(
        `<polyline class="series-line" data-name="${series.name}" points="${pts}" ` +
          `fill="none" stroke="${series.color}" stroke-width="1.8"/>`,
      );
    } else {
      const marks: string[] = [];
      for (const p of series.points) {
        const cx = scaled(sx, p.x);
        const cy = scaled(sy, p.y);
        if (p.spread !== undefined && p.spread > 0) {
          const y1 = scaled(sy, p.y - p.spread);
          const y2 = scaled(sy, p.y + p.spread);
          marks.push(
            `<line x1="${fmt(cx)}" y1="${fmt(y1)}" x2="${fmt(cx)}" y2="${fmt(y2)}" ` +
              `stroke="${series.color}" stroke-width="1"/>`,
          );
        }
        const opacity = p.opacity === undefined ? 1 : p.opacity;
        marks.push(
          `<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="3.5" fill="none" ` +
            `stroke="${series.color}" stroke-width="1.4" opacity="${opacity.toFixed(3)}"/>`,
        );
      }
      parts.push(
        `<g class="series-markers" data-name="${series.name}">${marks.join("")}</g>`,
      );
    }
  }
  parts.push("</svg>");
  return parts.join("\n");
}
