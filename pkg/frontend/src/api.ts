/** Typed client for the rule-workbench HTTP service.
 *
 * Expected domain outcomes (parse rejection with an offset, duplicate rule)
 * are returned as discriminated unions so the UI can render them; anything
 * else non-2xx throws ApiError with the server's error body attached.
 */

export interface Metrics {
  precision: number;
  recall: number;
  f1: number;
  predicted_positive: number;
  gold_positive: number;
  correct_positive: number;
}

export interface Delta {
  precision: number;
  recall: number;
  f1: number;
}

export interface BundleInfo {
  relations: string[];
  mode: string;
  threshold: number;
  episodes: number;
  version: null;
}

export interface SessionInfo {
  id: string;
  version: number;
  created: string;
  updated: string;
  /** Present when listing sessions; absent on create. */
  edits?: number;
}

export interface RuleEntry {
  rule_id: string;
  relation: string;
  text: string;
  enabled: boolean;
  origin: "support" | "manual";
  source_instance_id: string | null;
}

export interface RuleList {
  version: number;
  rules: RuleEntry[];
  overrides: Record<string, number>;
}

export interface EvaluateReport {
  version: number;
  mode: string;
  threshold: number;
  overrides: Record<string, number>;
  overall: Metrics;
  per_relation: Record<string, Metrics>;
  baseline_overall: Metrics;
  baseline_per_relation: Record<string, Metrics>;
  deltas: Record<string, Delta>;
  overall_delta: Delta;
}

export interface PreviewResult {
  strict: {
    matched: boolean;
    path: number[];
    edges: [number, number, string][];
    interval: [number, number] | null;
  };
  similarity: number;
  marked: string;
  version: null;
}

export type AddRuleResult =
  | { kind: "added"; version: number; ruleId: string; rule: RuleEntry }
  | { kind: "parse-error"; message: string; offset: number }
  | { kind: "duplicate"; message: string; existingId: string };

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: Record<string, unknown>,
  ) {
    super(typeof body["error"] === "string" ? (body["error"] as string) : `HTTP ${status}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function readBody(response: Response): Promise<Record<string, unknown>> {
  const text = await response.text();
  if (!text) return {};
  try {
    return JSON.parse(text) as Record<string, unknown>;
  } catch {
    return { error: text };
  }
}

export class WorkbenchClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request(
    method: string,
    path: string,
    payload?: unknown,
    allow: number[] = [],
  ): Promise<{ status: number; body: Record<string, unknown> }> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (payload !== undefined) init.body = JSON.stringify(payload);
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await readBody(response);
    if (!response.ok && !allow.includes(response.status)) {
      throw new ApiError(response.status, body);
    }
    return { status: response.status, body };
  }

  async relations(): Promise<BundleInfo> {
    const { body } = await this.request("GET", "/relations");
    return body as unknown as BundleInfo;
  }

  async openSession(id?: string): Promise<SessionInfo> {
    const { body } = await this.request("POST", "/sessions", id ? { id } : {});
    return body as unknown as SessionInfo;
  }

  async listSessions(): Promise<SessionInfo[]> {
    const { body } = await this.request("GET", "/sessions");
    return (body["sessions"] ?? []) as SessionInfo[];
  }

  async rules(sessionId: string): Promise<RuleList> {
    const { body } = await this.request("GET", `/sessions/${sessionId}/rules`);
    return body as unknown as RuleList;
  }

  /** ADD a rule; parse rejections and duplicates are data, not exceptions. */
  async addRule(sessionId: string, relation: string, text: string): Promise<AddRuleResult> {
    const { status, body } = await this.request(
      "POST",
      `/sessions/${sessionId}/rules`,
      { relation, text },
      [400, 409],
    );
    if (status === 400 && typeof body["offset"] === "number") {
      return { kind: "parse-error", message: String(body["error"]), offset: body["offset"] as number };
    }
    if (status === 409 && typeof body["existing_id"] === "string") {
      return { kind: "duplicate", message: String(body["error"]), existingId: body["existing_id"] as string };
    }
    if (status >= 400) throw new ApiError(status, body);
    return {
      kind: "added",
      version: body["version"] as number,
      ruleId: body["rule_id"] as string,
      rule: body["rule"] as unknown as RuleEntry,
    };
  }

  async deleteRule(sessionId: string, ruleId: string): Promise<{ version: number; rule: RuleEntry }> {
    const { body } = await this.request("DELETE", `/sessions/${sessionId}/rules/${ruleId}`);
    return body as unknown as { version: number; rule: RuleEntry };
  }

  async modifyRule(
    sessionId: string,
    ruleId: string,
    text: string,
  ): Promise<
    | { kind: "modified"; version: number; rule: RuleEntry }
    | { kind: "parse-error"; message: string; offset: number }
  > {
    const { status, body } = await this.request(
      "PUT",
      `/sessions/${sessionId}/rules/${ruleId}`,
      { text },
      [400],
    );
    if (status === 400 && typeof body["offset"] === "number") {
      return { kind: "parse-error", message: String(body["error"]), offset: body["offset"] as number };
    }
    if (status >= 400) throw new ApiError(status, body);
    return { kind: "modified", version: body["version"] as number, rule: body["rule"] as unknown as RuleEntry };
  }

  async setOverride(
    sessionId: string,
    relation: string,
    threshold: number | null,
  ): Promise<{ version: number; overrides: Record<string, number> }> {
    const { body } = await this.request("PUT", `/sessions/${sessionId}/overrides`, {
      relation,
      threshold,
    });
    return body as unknown as { version: number; overrides: Record<string, number> };
  }

  async evaluate(
    sessionId: string,
    options: { mode?: string; threshold?: number; overrides?: Record<string, number> } = {},
  ): Promise<EvaluateReport> {
    const { body } = await this.request("POST", `/sessions/${sessionId}/evaluate`, options);
    return body as unknown as EvaluateReport;
  }

  async preview(
    rule: string,
    target: { instanceId: string } | { instance: unknown },
  ): Promise<PreviewResult | { kind: "parse-error"; message: string; offset: number }> {
    const payload: Record<string, unknown> = { rule };
    if ("instanceId" in target) payload["instance_id"] = target.instanceId;
    else payload["instance"] = target.instance;
    const { status, body } = await this.request("POST", "/preview", payload, [400]);
    if (status === 400 && typeof body["offset"] === "number") {
      return { kind: "parse-error", message: String(body["error"]), offset: body["offset"] as number };
    }
    if (status >= 400) throw new ApiError(status, body);
    return body as unknown as PreviewResult;
  }
}
