import type {
  OperatorDescriptor,
  ParamSchema,
  RunStatus,
  StatsPayload,
} from "../src/types.js";

/** The sixteen operators in the order GET /operators serves them. */
export const SERVER_ORDER = [
  "Extract",
  "FormatConvert",
  "RobotCleaner",
  "BusinessAcademic",
  "VulnerableEliminator",
  "Deduplicator",
  "SyntacticCorrector",
  "SemanticCorrector",
  "TopicClustering",
  "SchemaRanking",
  "ComplexityFilter",
  "ExpertiseFilter",
  "AnalyticSelector",
  "LogsJoin",
  "LogsEnrichment",
  "Load",
] as const;

const THRESHOLD: ParamSchema = {
  type: "number",
  minimum: 0,
  maximum: 1,
  default: 0.8,
};

const PARAMS: Record<string, Record<string, ParamSchema>> = {
  Extract: {
    keep_forms: {
      type: "array",
      items: { type: "string", enum: ["Select", "Construct", "Ask", "Describe"] },
      default: ["Select", "Construct"],
    },
  },
  RobotCleaner: {
    session_gap_minutes: { type: "number", minimum: 0, default: 30 },
    rate_threshold: { type: "number", minimum: 0, default: 60 },
    regularity_cv: { type: "number", minimum: 0, default: 0.1 },
    min_session_length: { type: "integer", minimum: 2, default: 10 },
    agent_patterns: { type: "array", items: { type: "string" } },
  },
  BusinessAcademic: {
    keep: {
      type: "array",
      items: { type: "string", enum: ["Business", "Academic", "Unknown"] },
      default: ["Business", "Academic"],
    },
  },
  Deduplicator: {
    mode: { type: "string", enum: ["exact", "canonical"], default: "canonical" },
  },
  SemanticCorrector: { max_distance: { type: "integer", minimum: 1, default: 2 } },
  TopicClustering: { keep: { type: "array", items: { type: "string" } } },
  SchemaRanking: { threshold: THRESHOLD },
  ComplexityFilter: {
    keep_shapes: {
      type: "array",
      items: {
        type: "string",
        enum: ["SingleTriple", "Star", "Chain", "Tree", "Cycle", "Flower"],
      },
    },
    min_depth: { type: "integer", minimum: 0, default: 0 },
    max_depth: { type: "integer", minimum: 0 },
  },
  ExpertiseFilter: {
    keep: {
      type: "array",
      items: { type: "string", enum: ["Beginner", "Intermediate", "Expert"] },
      default: ["Beginner", "Intermediate", "Expert"],
    },
  },
  AnalyticSelector: {
    keep: { type: "string", enum: ["Analytic", "Standard", "Both"], default: "Both" },
  },
  LogsJoin: { threshold: THRESHOLD },
  LogsEnrichment: { threshold: THRESHOLD },
};

export function catalogue(): OperatorDescriptor[] {
  return SERVER_ORDER.map((name) => ({
    name,
    summary: `${name} does its part`,
    params: PARAMS[name] ?? {},
    requires: name === "ExpertiseFilter" ? ["ComplexityFilter"] : [],
    needs_second_log: name === "LogsEnrichment",
  }));
}

export function descriptor(name: string): OperatorDescriptor {
  const found = catalogue().find((entry) => entry.name === name);
  if (found === undefined) throw new Error(`no descriptor ${name}`);
  return found;
}

export function runStatus(overrides: Partial<RunStatus> = {}): RunStatus {
  return {
    run_id: "run-1",
    status: "Pending",
    stage: null,
    completed: [],
    order: ["Extract", "Deduplicator", "Load"],
    error: null,
    ...overrides,
  };
}

/** Per-stage counts that are deterministic but deliberately unrelated
 *  to one another, so any client-side recomputation shows up. */
export function statsFor(runId: string, order: readonly string[]): StatsPayload {
  return {
    run_id: runId,
    operators: order.map((name, position) => ({
      name,
      input: 1000 - 13 * position,
      trusted: 700 - 11 * position,
      untrusted: 300 - 2 * position,
      rate_of_trust: ((position * 7) % 100) / 100,
      duration_ms: position * 3,
    })),
    final_trusted: 123,
    overall_rate_of_trust: 0.88,
  };
}

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/** A fetch that pops one scripted response (or error) per call. */
export function queuedFetch(
  queue: Array<Response | Error>,
): { fetch: (url: string, init?: RequestInit) => Promise<Response>; calls: string[] } {
  const calls: string[] = [];
  return {
    calls,
    fetch: (url) => {
      calls.push(url);
      const next = queue.shift();
      if (next === undefined) return Promise.reject(new Error("queue exhausted"));
      if (next instanceof Error) return Promise.reject(next);
      return Promise.resolve(next);
    },
  };
}
