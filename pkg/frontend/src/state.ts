/** Pure state container for the workbench UI.
 *
 * Every mutating endpoint returns the session version it produced, and every
 * evaluation report carries the version it was computed against. The reducer
 * uses those numbers to discard stale responses: a report that arrives after
 * a later edit (or after a newer report) is dropped rather than rendered, and
 * a displayed report is flagged stale whenever the session has moved past it.
 */

import type { Delta, EvaluateReport, Metrics, RuleEntry } from "./api.js";

export interface EditorState {
  text: string;
  relation: string;
  rejection: { message: string; offset: number } | null;
}

export interface WorkbenchState {
  sessionId: string | null;
  /** Latest session version confirmed by the server. */
  version: number;
  relations: string[];
  mode: string;
  threshold: number;
  rules: RuleEntry[];
  overrides: Record<string, number>;
  report: EvaluateReport | null;
  editor: EditorState;
  notice: string | null;
}

export type Action =
  | { type: "bundle-loaded"; relations: string[]; mode: string; threshold: number }
  | { type: "session-opened"; id: string; version: number }
  | {
      type: "rules-loaded";
      version: number;
      rules: RuleEntry[];
      overrides: Record<string, number>;
    }
  | { type: "rule-added"; version: number; rule: RuleEntry }
  | { type: "rule-removed"; version: number; rule: RuleEntry }
  | { type: "overrides-changed"; version: number; overrides: Record<string, number> }
  | { type: "parse-rejected"; message: string; offset: number }
  | { type: "duplicate-rejected"; message: string; existingId: string }
  | { type: "editor-changed"; text: string; relation: string }
  | { type: "report-received"; report: EvaluateReport }
  | { type: "notice"; message: string | null };

export function initialState(): WorkbenchState {
  return {
    sessionId: null,
    version: 0,
    relations: [],
    mode: "hybrid",
    threshold: 0.5,
    rules: [],
    overrides: {},
    report: null,
    editor: { text: "", relation: "", rejection: null },
    notice: null,
  };
}

/** True when `report` would be a stale response for the current state. */
export function isStaleReport(state: WorkbenchState, report: EvaluateReport): boolean {
  if (state.report !== null && report.version < state.report.version) return true;
  return report.version > state.version; // response from a session we don't know yet
}

/** True when the displayed report no longer reflects the session. */
export function reportIsOutdated(state: WorkbenchState): boolean {
  return state.report !== null && state.report.version !== state.version;
}

function bumpVersion(state: WorkbenchState, version: number): number {
  return Math.max(state.version, version);
}

export function reduce(state: WorkbenchState, action: Action): WorkbenchState {
  switch (action.type) {
    case "bundle-loaded":
      return {
        ...state,
        relations: [...action.relations],
        mode: action.mode,
        threshold: action.threshold,
        editor: {
          ...state.editor,
          relation: state.editor.relation || action.relations[0] || "",
        },
      };
    case "session-opened":
      return {
        ...state,
        sessionId: action.id,
        version: action.version,
        rules: [],
        overrides: {},
        report: null,
        notice: null,
      };
    case "rules-loaded":
      if (action.version < state.version) return state; // stale listing
      return {
        ...state,
        version: bumpVersion(state, action.version),
        rules: [...action.rules],
        overrides: { ...action.overrides },
      };
    case "rule-added":
      return {
        ...state,
        version: bumpVersion(state, action.version),
        rules: [...state.rules, action.rule],
        editor: { ...state.editor, text: "", rejection: null },
        notice: null,
      };
    case "rule-removed":
      return {
        ...state,
        version: bumpVersion(state, action.version),
        rules: state.rules.map((r) => (r.rule_id === action.rule.rule_id ? action.rule : r)),
      };
    case "overrides-changed":
      return {
        ...state,
        version: bumpVersion(state, action.version),
        overrides: { ...action.overrides },
      };
    case "parse-rejected":
      return {
        ...state,
        editor: {
          ...state.editor,
          rejection: { message: action.message, offset: action.offset },
        },
      };
    case "duplicate-rejected":
      return {
        ...state,
        editor: { ...state.editor, rejection: null },
        notice: `${action.message} (existing rule: ${action.existingId})`,
      };
    case "editor-changed":
      return {
        ...state,
        editor: { text: action.text, relation: action.relation, rejection: null },
      };
    case "report-received":
      if (isStaleReport(state, action.report)) return state;
      return { ...state, report: action.report };
    case "notice":
      return { ...state, notice: action.message };
  }
}

/** Relations whose evaluation deltas are nonzero in the current report. */
export function changedRelations(report: EvaluateReport): string[] {
  return Object.entries(report.deltas)
    .filter(([, d]) => deltaIsNonzero(d))
    .map(([rel]) => rel)
    .sort();
}

export function deltaIsNonzero(d: Delta): boolean {
  return d.precision !== 0 || d.recall !== 0 || d.f1 !== 0;
}

export function metricsOrEmpty(table: Record<string, Metrics>, relation: string): Metrics {
  return (
    table[relation] ?? {
      precision: 0,
      recall: 0,
      f1: 0,
      predicted_positive: 0,
      gold_positive: 0,
      correct_positive: 0,
    }
  );
}
