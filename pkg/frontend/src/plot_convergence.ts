/**
 * Convergence plots — SVG plotter for the sweep metrics CSV
 *
 * Reads the metrics CSV written by the sweep harness (one row per strain
 * scale and instant) and renders a log-log plot of one metric against the
 * strain scale eps, with a fitted-order annotation per series. A series is
 * either the sup over time of the metric or its value at one chosen
 * instant. Everything shown is recomputed from the CSV alone; output is
 * deterministic for fixed input.
 */

import { readFileSync, writeFileSync } from "fs";
import Papa from "papaparse";

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

/** The exact column set of the harness CSV, in file order. */
export const CSV_COLUMNS = [
  "eps",
  "t",
  "err_u_H1",
  "err_z_L2",
  "A_field_err",
  "energy_gap",
  "diss_gap",
  "stability_residual",
  "balance_gap",
] as const;

/** Columns that can be plotted against eps (everything but the coordinates). */
export const METRIC_COLUMNS = CSV_COLUMNS.slice(2) as readonly string[];

export interface MetricRow {
  eps: number;
  t: number;
  err_u_H1: number;
  err_z_L2: number;
  A_field_err: number;
  energy_gap: number;
  diss_gap: number;
  stability_residual: number;
  balance_gap: number;
}

export interface PlotSpec {
  csvPath: string;
  /** Column to plot; must be one of METRIC_COLUMNS. */
  metric: string;
  /** Instants to plot as separate series, or "sup" for the sup over time. */
  instants?: number[] | "sup";
  /** Output image path (SVG). */
  output: string;
}

/** The CSV does not have the expected shape (header, types, column name). */
export class SchemaError extends Error {}

/** The CSV is well-formed but holds too little data to plot a fit. */
export class EmptyDataError extends Error {}

// ---------------------------------------------------------------------------
// CSV reading
// ---------------------------------------------------------------------------

/** Parse and schema-validate the metrics CSV. SchemaError on any mismatch. */
export function readMetricsCsv(csvPath: string): MetricRow[] {
  const text = readFileSync(csvPath, "utf8");
  const parsed = Papa.parse<MetricRow>(text, {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  if (fields.join(",") !== CSV_COLUMNS.join(",")) {
    throw new SchemaError(
      `expected header "${CSV_COLUMNS.join(",")}", got "${fields.join(",")}"`
    );
  }
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`malformed CSV: ${first.message} (row ${first.row})`);
  }
  parsed.data.forEach((row, i) => {
    for (const col of CSV_COLUMNS) {
      const value = row[col as keyof MetricRow];
      if (typeof value !== "number" || !Number.isFinite(value)) {
        throw new SchemaError(`non-numeric ${col} in data row ${i + 1}`);
      }
    }
  });
  if (parsed.data.length === 0) {
    throw new EmptyDataError("the CSV holds no data rows");
  }
  return parsed.data;
}

// ---------------------------------------------------------------------------
// Series extraction and order fit
// ---------------------------------------------------------------------------

interface Series {
  label: string;
  /** One point per ladder entry, eps descending; value may be <= 0. */
  points: { eps: number; value: number }[];
}

/** Least-squares slope of ln(value) against ln(eps) over positive points. */
export function fitSlope(eps: number[], values: number[]): number {
  const xs = eps.map(Math.log);
  const ys = values.map(Math.log);
  const xMean = xs.reduce((a, b) => a + b, 0) / xs.length;
  const yMean = ys.reduce((a, b) => a + b, 0) / ys.length;
  let num = 0;
  let den = 0;
  for (let i = 0; i < xs.length; i++) {
    num += (xs[i] - xMean) * (ys[i] - yMean);
    den += (xs[i] - xMean) * (xs[i] - xMean);
  }
  return num / den;
}

function ladderOf(rows: MetricRow[]): number[] {
  const ladder = [...new Set(rows.map((r) => r.eps))];
  ladder.sort((a, b) => b - a);
  return ladder;
}

function extractSeries(
  rows: MetricRow[],
  metric: string,
  instants: number[] | "sup"
): Series[] {
  if (!METRIC_COLUMNS.includes(metric)) {
    throw new SchemaError(
      `unknown metric "${metric}"; expected one of ${METRIC_COLUMNS.join(", ")}`
    );
  }
  const ladder = ladderOf(rows);
  if (ladder.length < 2) {
    throw new EmptyDataError(
      `cannot fit an order from ${ladder.length} strain scale(s)`
    );
  }
  const key = metric as keyof MetricRow;
  if (instants === "sup") {
    return [
      {
        label: "sup over t",
        points: ladder.map((eps) => ({
          eps,
          value: Math.max(
            ...rows.filter((r) => r.eps === eps).map((r) => r[key])
          ),
        })),
      },
    ];
  }
  const grid = [...new Set(rows.map((r) => r.t))];
  const series: Series[] = [];
  for (const t of instants) {
    if (!grid.includes(t)) {
      throw new EmptyDataError(`no rows at instant t = ${t}`);
    }
    series.push({
      label: `t = ${t}`,
      points: ladder.map((eps) => ({
        eps,
        value: rows.find((r) => r.eps === eps && r.t === t)![key],
      })),
    });
  }
  if (series.length === 0) {
    throw new EmptyDataError("no instants selected");
  }
  return series;
}

// ---------------------------------------------------------------------------
// SVG helpers
// ---------------------------------------------------------------------------

const COLORS = ["#4361ee", "#e63946", "#2d6a4f", "#f77f00", "#7b2cbf"];

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** "1e-4"-style label for a decade tick. */
function decadeLabel(exponent: number): string {
  return `1e${exponent}`;
}

function renderSvg(metric: string, series: Series[]): string {
  const W = 640;
  const H = 420;
  const ml = 70;
  const mr = 24;
  const mt = 44;
  const mb = 58;
  const pw = W - ml - mr;
  const ph = H - mt - mb;

  const ladder = series[0].points.map((p) => p.eps);
  const lxMin = Math.log10(ladder[ladder.length - 1]);
  const lxMax = Math.log10(ladder[0]);
  const xOf = (eps: number) =>
    ml + ((Math.log10(eps) - lxMin) / (lxMax - lxMin)) * pw;

  // y range over every positive value; nonpositive values cannot sit on a
  // log axis and are excluded from both the range and the order fits
  const positives = series.flatMap((s) =>
    s.points.filter((p) => p.value > 0).map((p) => p.value)
  );
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="${W / 2}" y="22" text-anchor="middle" font-size="15" font-weight="bold">${esc(metric)} vs eps (log-log)</text>`
  );

  if (positives.length === 0) {
    parts.push(
      `<rect x="${ml}" y="${mt}" width="${pw}" height="${ph}" fill="none" stroke="#999"/>`
    );
    parts.push(
      `<text x="${ml + pw / 2}" y="${mt + ph / 2}" text-anchor="middle" fill="#666">no positive values to plot</text>`
    );
    parts.push(`</svg>`);
    return parts.join("\n");
  }

  const lyMin = Math.floor(Math.log10(Math.min(...positives)));
  const lyMax = Math.ceil(Math.log10(Math.max(...positives)));
  const lySpan = Math.max(lyMax - lyMin, 1);
  const yOf = (value: number) =>
    mt + ph - ((Math.log10(value) - lyMin) / lySpan) * ph;

  // frame and decade grid
  parts.push(
    `<rect x="${ml}" y="${mt}" width="${pw}" height="${ph}" fill="none" stroke="#999"/>`
  );
  for (let e = lyMin; e <= lyMin + lySpan; e++) {
    const y = yOf(Math.pow(10, e));
    parts.push(
      `<line x1="${ml}" y1="${y.toFixed(2)}" x2="${ml + pw}" y2="${y.toFixed(2)}" stroke="#e0e0e0"/>`
    );
    parts.push(
      `<text x="${ml - 8}" y="${(y + 4).toFixed(2)}" text-anchor="end">${decadeLabel(e)}</text>`
    );
  }
  for (const eps of ladder) {
    const x = xOf(eps);
    parts.push(
      `<line x1="${x.toFixed(2)}" y1="${mt}" x2="${x.toFixed(2)}" y2="${mt + ph}" stroke="#e0e0e0"/>`
    );
    parts.push(
      `<text x="${x.toFixed(2)}" y="${mt + ph + 18}" text-anchor="middle">${eps}</text>`
    );
  }
  parts.push(
    `<text x="${ml + pw / 2}" y="${H - 14}" text-anchor="middle">eps</text>`
  );
  parts.push(
    `<text x="20" y="${mt + ph / 2}" text-anchor="middle" transform="rotate(-90 20 ${mt + ph / 2})">${esc(metric)}</text>`
  );

  // series: line through the positive points, slope annotation in the legend
  series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length];
    const shown = s.points.filter((p) => p.value > 0);
    const line = shown
      .map((p) => `${xOf(p.eps).toFixed(2)},${yOf(p.value).toFixed(2)}`)
      .join(" ");
    if (shown.length >= 2) {
      parts.push(
        `<polyline points="${line}" fill="none" stroke="${color}" stroke-width="1.5"/>`
      );
    }
    for (const p of shown) {
      parts.push(
        `<circle cx="${xOf(p.eps).toFixed(2)}" cy="${yOf(p.value).toFixed(2)}" r="3" fill="${color}"/>`
      );
    }
    const distinct = new Set(shown.map((p) => p.eps));
    const note =
      distinct.size >= 2
        ? `slope ${fitSlope(shown.map((p) => p.eps), shown.map((p) => p.value)).toFixed(3)}`
        : "no fit";
    const ly = mt + 16 + 18 * i;
    parts.push(
      `<line x1="${ml + 10}" y1="${ly - 4}" x2="${ml + 34}" y2="${ly - 4}" stroke="${color}" stroke-width="1.5"/>`
    );
    parts.push(
      `<text x="${ml + 40}" y="${ly}">${esc(`${s.label}: ${note}`)}</text>`
    );
  });
  parts.push(`</svg>`);
  return parts.join("\n");
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/** Render one metric of the CSV to an SVG file; returns the output path. */
export function plotConvergence(spec: PlotSpec): string {
  const rows = readMetricsCsv(spec.csvPath);
  const series = extractSeries(rows, spec.metric, spec.instants ?? "sup");
  writeFileSync(spec.output, renderSvg(spec.metric, series));
  return spec.output;
}
