import type { SamplePayload, StatsPayload, StatsRow } from "./types.js";

export type StatsRowView = {
  name: string;
  input: string;
  trusted: string;
  untrusted: string;
  rate: string;
  durationMs: string;
};

export type StatsView = {
  runId: string;
  rows: StatsRowView[];
  finalTrusted: string;
  overallRate: string;
};

/**
 * Zone (c): every number comes verbatim from the API payload. Counts are
 * stringified as-is and the rate is the served value printed at two
 * decimals — the panel never recomputes a rate from the counts.
 */
export function buildStatsView(stats: StatsPayload): StatsView {
  return {
    runId: stats.run_id,
    rows: stats.operators.map(rowView),
    finalTrusted: String(stats.final_trusted),
    overallRate: stats.overall_rate_of_trust.toFixed(2),
  };
}

export function rowView(row: StatsRow): StatsRowView {
  return {
    name: row.name,
    input: String(row.input),
    trusted: String(row.trusted),
    untrusted: String(row.untrusted),
    rate: row.rate_of_trust.toFixed(2),
    durationMs: String(row.duration_ms),
  };
}

export type SampleView = {
  operator: string;
  trusted: Array<{ id: string; text: string }>;
  untrusted: Array<{ id: string; text: string }>;
};

export function buildSampleView(
  sample: SamplePayload,
  limit = 5,
): SampleView {
  const shorten = (queries: SamplePayload["trusted"]) =>
    queries.slice(0, limit).map((query) => ({ id: query.id, text: query.text }));
  return {
    operator: sample.operator,
    trusted: shorten(sample.trusted),
    untrusted: shorten(sample.untrusted),
  };
}
