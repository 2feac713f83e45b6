/**
 * Payload shapes of the curation API, as the server emits them.
 * The UI never invents fields and never recomputes derived numbers.
 */

export type ParamSchema = {
  type: "number" | "integer" | "string" | "array";
  minimum?: number;
  maximum?: number;
  default?: unknown;
  enum?: string[];
  items?: { type: string; enum?: string[] };
};

export type OperatorDescriptor = {
  name: string;
  summary: string;
  params: Record<string, ParamSchema>;
  requires: string[];
  needs_second_log: boolean;
};

export type OperatorCatalogue = { operators: OperatorDescriptor[] };

export type PipelineCreated = {
  run_id: string;
  status: string;
  order: string[];
};

export type RunStatus = {
  run_id: string;
  status: "Pending" | "Running" | "Done" | "Failed";
  stage: string | null;
  completed: string[];
  order: string[];
  error: string | null;
};

export type StatsRow = {
  name: string;
  input: number;
  trusted: number;
  untrusted: number;
  rate_of_trust: number;
  duration_ms: number;
};

export type StatsPayload = {
  run_id: string;
  operators: StatsRow[];
  final_trusted: number;
  overall_rate_of_trust: number;
};

export type SampleQuery = {
  id: string;
  source_log: string;
  text: string;
  ip: string;
  timestamp: string;
};

export type SamplePayload = {
  run_id: string;
  operator: string;
  trusted: SampleQuery[];
  untrusted: SampleQuery[];
};

export type InputSpec = {
  path: string;
  format: string;
  source_dataset: string;
};

/** Body for POST /pipelines, assembled from the palette. */
export type PipelineSpec = {
  run_id: string;
  inputs: InputSpec[];
  knowledge_bases: Record<string, string | null>;
  store?: string | null;
  operators: Array<string | { name: string; params: Record<string, unknown> }>;
};
