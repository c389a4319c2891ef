/** Browser entry point: wires the workbench client and reducer to the DOM.
 *
 * All behaviour lives in the pure modules (api/state/caret/deltas); this file
 * only translates DOM events into client calls and state into elements, so it
 * is excluded from the unit-test suite and exercised end to end instead.
 */

import { ApiError, WorkbenchClient } from "./api.js";
import type { RuleEntry } from "./api.js";
import { caretView, describeRejection } from "./caret.js";
import { deltaRows, formatDelta, formatMetric, summarizeOverall } from "./deltas.js";
import { initialState, reduce, reportIsOutdated } from "./state.js";
import type { Action, WorkbenchState } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

class App {
  private state: WorkbenchState = initialState();

  constructor(private readonly client: WorkbenchClient) {}

  private dispatch(action: Action): void {
    this.state = reduce(this.state, action);
    this.render();
  }

  private fail(error: unknown): void {
    const message =
      error instanceof ApiError
        ? `server rejected the request: ${error.message}`
        : `request failed: ${String(error)}`;
    this.dispatch({ type: "notice", message });
  }

  async start(): Promise<void> {
    const info = await this.client.relations();
    this.dispatch({
      type: "bundle-loaded",
      relations: info.relations,
      mode: info.mode,
      threshold: info.threshold,
    });
    const session = await this.client.openSession();
    this.dispatch({ type: "session-opened", id: session.id, version: session.version });
    const rules = await this.client.rules(session.id);
    this.dispatch({
      type: "rules-loaded",
      version: rules.version,
      rules: rules.rules,
      overrides: rules.overrides,
    });
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null) return;
    try {
      const report = await this.client.evaluate(sessionId);
      this.dispatch({ type: "report-received", report });
    } catch (error) {
      this.fail(error);
    }
  }

  async addRule(): Promise<void> {
    const { sessionId, editor } = this.state;
    if (sessionId === null || editor.text.trim() === "") return;
    try {
      const result = await this.client.addRule(sessionId, editor.relation, editor.text);
      if (result.kind === "parse-error") {
        this.dispatch({ type: "parse-rejected", message: result.message, offset: result.offset });
      } else if (result.kind === "duplicate") {
        this.dispatch({
          type: "duplicate-rejected",
          message: result.message,
          existingId: result.existingId,
        });
      } else {
        this.dispatch({ type: "rule-added", version: result.version, rule: result.rule });
      }
    } catch (error) {
      this.fail(error);
    }
  }

  async deleteRule(ruleId: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null) return;
    try {
      const result = await this.client.deleteRule(sessionId, ruleId);
      this.dispatch({ type: "rule-removed", version: result.version, rule: result.rule });
    } catch (error) {
      this.fail(error);
    }
  }

  async setOverride(relation: string, threshold: number | null): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null) return;
    try {
      const result = await this.client.setOverride(sessionId, relation, threshold);
      this.dispatch({
        type: "overrides-changed",
        version: result.version,
        overrides: result.overrides,
      });
    } catch (error) {
      this.fail(error);
    }
  }

  editorChanged(): void {
    const text = el<HTMLInputElement>("rule-input").value;
    const relation = el<HTMLSelectElement>("relation-select").value;
    this.dispatch({ type: "editor-changed", text, relation });
  }

  bind(): void {
    el<HTMLInputElement>("rule-input").addEventListener("input", () => this.editorChanged());
    el<HTMLSelectElement>("relation-select").addEventListener("change", () => this.editorChanged());
    el<HTMLButtonElement>("add-rule").addEventListener("click", () => {
      void this.addRule().then(() => this.refresh());
    });
    el<HTMLButtonElement>("refresh").addEventListener("click", () => void this.refresh());
    el<HTMLButtonElement>("set-override").addEventListener("click", () => {
      const relation = el<HTMLSelectElement>("override-relation").value;
      const raw = el<HTMLInputElement>("override-value").value;
      const value = Number(raw);
      if (raw === "" || Number.isNaN(value)) return;
      void this.setOverride(relation, value).then(() => this.refresh());
    });
    el<HTMLButtonElement>("clear-override").addEventListener("click", () => {
      const relation = el<HTMLSelectElement>("override-relation").value;
      void this.setOverride(relation, null).then(() => this.refresh());
    });
  }

  private renderRelationOptions(select: HTMLSelectElement): void {
    const current = select.value;
    select.replaceChildren(
      ...this.state.relations.map((rel) => {
        const option = document.createElement("option");
        option.value = rel;
        option.textContent = rel;
        return option;
      }),
    );
    if (this.state.relations.includes(current)) select.value = current;
  }

  private renderRules(): void {
    const body = el<HTMLTableSectionElement>("rules-body");
    body.replaceChildren(
      ...this.state.rules.map((rule: RuleEntry) => {
        const row = document.createElement("tr");
        row.className = rule.enabled ? "rule-enabled" : "rule-disabled";
        const cells = [rule.rule_id, rule.relation, rule.text, rule.origin];
        for (const value of cells) {
          const cell = document.createElement("td");
          cell.textContent = value;
          row.appendChild(cell);
        }
        const actions = document.createElement("td");
        if (rule.enabled) {
          const remove = document.createElement("button");
          remove.textContent = "delete";
          remove.addEventListener("click", () => {
            void this.deleteRule(rule.rule_id).then(() => this.refresh());
          });
          actions.appendChild(remove);
        } else {
          actions.textContent = "disabled";
        }
        row.appendChild(actions);
        return row;
      }),
    );
  }

  private renderRejection(): void {
    const box = el<HTMLPreElement>("rejection");
    const rejection = this.state.editor.rejection;
    if (rejection === null) {
      box.hidden = true;
      box.textContent = "";
      return;
    }
    const view = caretView(this.state.editor.text, rejection.offset);
    box.hidden = false;
    box.textContent = `${view.text}\n${view.caretLine}\n${describeRejection(
      rejection.message,
      rejection.offset,
    )}`;
  }

  private renderReport(): void {
    const overall = el<HTMLParagraphElement>("overall");
    const staleBadge = el<HTMLSpanElement>("stale");
    const body = el<HTMLTableSectionElement>("delta-body");
    const report = this.state.report;
    if (report === null) {
      overall.textContent = "no evaluation yet";
      staleBadge.hidden = true;
      body.replaceChildren();
      return;
    }
    overall.textContent = summarizeOverall(report);
    staleBadge.hidden = !reportIsOutdated(this.state);
    body.replaceChildren(
      ...deltaRows(report).map((row) => {
        const tr = document.createElement("tr");
        tr.className = row.changed ? "delta-changed" : "delta-unchanged";
        const cells = [
          row.relation,
          formatMetric(row.baselineF1),
          formatMetric(row.f1),
          formatDelta(row.delta.precision),
          formatDelta(row.delta.recall),
          formatDelta(row.delta.f1),
        ];
        for (const value of cells) {
          const cell = document.createElement("td");
          cell.textContent = value;
          tr.appendChild(cell);
        }
        return tr;
      }),
    );
  }

  render(): void {
    el<HTMLSpanElement>("session-label").textContent =
      this.state.sessionId === null
        ? "connecting..."
        : `session ${this.state.sessionId} (v${this.state.version}, ${this.state.mode} @ ${this.state.threshold})`;
    this.renderRelationOptions(el<HTMLSelectElement>("relation-select"));
    this.renderRelationOptions(el<HTMLSelectElement>("override-relation"));
    const input = el<HTMLInputElement>("rule-input");
    if (input.value !== this.state.editor.text) input.value = this.state.editor.text;
    this.renderRejection();
    const notice = el<HTMLParagraphElement>("notice");
    notice.hidden = this.state.notice === null;
    notice.textContent = this.state.notice ?? "";
    el<HTMLSpanElement>("override-label").textContent =
      Object.keys(this.state.overrides).length === 0
        ? "none"
        : Object.entries(this.state.overrides)
            .map(([rel, value]) => `${rel}=${value}`)
            .join(", ");
    this.renderRules();
    this.renderReport();
  }
}

/** API base: `?api=http://host:port` beats `<body data-api-base>` beats origin. */
function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  if (fromQuery !== null && fromQuery !== "") return fromQuery;
  const fromBody = document.body.dataset["apiBase"];
  if (fromBody !== undefined && fromBody !== "") return fromBody;
  return window.location.origin;
}

const app = new App(new WorkbenchClient(apiBase()));
app.bind();
app.render();
void app.start();
