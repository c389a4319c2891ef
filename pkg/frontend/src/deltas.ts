/** Turn an evaluation report into rows for the per-relation delta table.
 *
 * Unedited relations come back from the server bitwise-identical to the
 * baseline, so their deltas are exactly 0.0 and the `changed` flag can use
 * strict inequality instead of an epsilon.
 */

import type { Delta, EvaluateReport } from "./api.js";
import { deltaIsNonzero, metricsOrEmpty } from "./state.js";

export interface DeltaRow {
  relation: string;
  precision: number;
  recall: number;
  f1: number;
  baselineF1: number;
  delta: Delta;
  changed: boolean;
}

export function deltaRows(report: EvaluateReport): DeltaRow[] {
  const names = new Set([
    ...Object.keys(report.per_relation),
    ...Object.keys(report.baseline_per_relation),
    ...Object.keys(report.deltas),
  ]);
  return [...names].sort().map((relation) => {
    const now = metricsOrEmpty(report.per_relation, relation);
    const was = metricsOrEmpty(report.baseline_per_relation, relation);
    const delta = report.deltas[relation] ?? { precision: 0, recall: 0, f1: 0 };
    return {
      relation,
      precision: now.precision,
      recall: now.recall,
      f1: now.f1,
      baselineF1: was.f1,
      delta,
      changed: deltaIsNonzero(delta),
    };
  });
}

/** Fixed-width metric for table cells, e.g. `0.818`. */
export function formatMetric(value: number): string {
  return value.toFixed(3);
}

/** Signed delta for table cells: `+0.267`, `-0.413`, or `±0.000`. */
export function formatDelta(value: number): string {
  if (value === 0) return "±0.000";
  const sign = value > 0 ? "+" : "-";
  return `${sign}${Math.abs(value).toFixed(3)}`;
}

/** One line summarising the overall movement versus the baseline. */
export function summarizeOverall(report: EvaluateReport): string {
  const f1 = formatMetric(report.overall.f1);
  const base = formatMetric(report.baseline_overall.f1);
  const delta = formatDelta(report.overall_delta.f1);
  return `overall F1 ${f1} (baseline ${base}, ${delta})`;
}
