import type { Series } from "./types.js";

export interface ChartOptions {
  width?: number;
  height?: number;
  highlightDate?: string;
  role?: string;
}

/** Consecutive non-null runs; a null splits the line, it never interpolates. */
export function segments(series: Series): Array<Array<{ index: number; value: number }>> {
  const out: Array<Array<{ index: number; value: number }>> = [];
  let current: Array<{ index: number; value: number }> = [];
  series.points.forEach((p, index) => {
    if (p.value === null) {
      if (current.length) out.push(current);
      current = [];
    } else {
      current.push({ index, value: p.value });
    }
  });
  if (current.length) out.push(current);
  return out;
}

function escapeHtml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

/** Render one series as an inline SVG line chart (gaps break the path). */
export function lineChart(series: Series, opts: ChartOptions = {}): string {
  const width = opts.width ?? 360;
  const height = opts.height ?? 90;
  const pad = 6;
  const runs = segments(series);
  const values = runs.flat().map((p) => p.value);
  const n = series.points.length;

  const lo = values.length ? Math.min(...values) : 0;
  const hi = values.length ? Math.max(...values) : 1;
  const span = hi - lo || 1;
  const x = (index: number) => pad + (n <= 1 ? 0 : (index / (n - 1)) * (width - 2 * pad));
  const y = (value: number) => height - pad - ((value - lo) / span) * (height - 2 * pad);

  const parts: string[] = [];
  for (const run of runs) {
    if (run.length === 1) {
      const p = run[0]!;
      parts.push(`<circle class="pt" cx="${x(p.index).toFixed(1)}" cy="${y(p.value).toFixed(1)}" r="2"/>`);
    } else {
      const coords = run.map((p) => `${x(p.index).toFixed(1)},${y(p.value).toFixed(1)}`).join(" ");
      parts.push(`<polyline fill="none" points="${coords}"/>`);
    }
  }

  if (opts.highlightDate) {
    const index = series.points.findIndex((p) => p.date === opts.highlightDate);
    if (index >= 0) {
      const cx = x(index).toFixed(1);
      parts.push(`<line class="highlight" x1="${cx}" y1="0" x2="${cx}" y2="${height}"/>`);
      const point = series.points[index];
      if (point && point.value !== null) {
        parts.push(`<circle class="highlight-pt" cx="${cx}" cy="${y(point.value).toFixed(1)}" r="3.5"/>`);
      }
    }
  }

  const role = opts.role ?? "chart";
  const label = `${series.region_id} (${series.tier}, pop ${series.population.toLocaleString("en-US")})`;
  return (
    `<figure class="chart" data-role="${escapeHtml(role)}" data-region="${escapeHtml(series.region_id)}">` +
    `<figcaption>${escapeHtml(label)}</figcaption>` +
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">${parts.join("")}</svg>` +
    `</figure>`
  );
}
