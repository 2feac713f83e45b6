import { buildOperatorParams, fieldsFor, type FormField } from "./forms.js";
import type { OperatorDescriptor, PipelineSpec } from "./types.js";

export type PaletteEntry = {
  name: string;
  summary: string;
  requires: string[];
  needsSecondLog: boolean;
  selected: boolean;
  fields: FormField[];
  errors: string[];
};

export type PaletteModel = {
  entries: PaletteEntry[];
  /** Selected names in the catalogue's order — the server's order, never ours. */
  preview: string[];
  canSubmit: boolean;
};

/**
 * Zone (a): one toggle per registry operator, a parameter form per
 * operator generated from its schema, and a preview of the pipeline the
 * selection would produce. The preview simply filters the catalogue
 * order (which the API serves canonically); the authoritative order
 * still comes back from POST /pipelines.
 */
export function buildPaletteModel(
  catalogue: OperatorDescriptor[],
  selected: ReadonlySet<string>,
  edited: Record<string, Record<string, unknown>> = {},
): PaletteModel {
  const entries = catalogue.map((descriptor) => {
    const params = buildOperatorParams(descriptor, edited[descriptor.name] ?? {});
    return {
      name: descriptor.name,
      summary: descriptor.summary,
      requires: descriptor.requires,
      needsSecondLog: descriptor.needs_second_log,
      selected: selected.has(descriptor.name),
      fields: fieldsFor(descriptor),
      errors: params.ok ? [] : params.errors,
    };
  });
  const preview = entries
    .filter((entry) => entry.selected)
    .map((entry) => entry.name);
  const canSubmit =
    preview.length > 0 &&
    entries.every((entry) => !entry.selected || entry.errors.length === 0);
  return { entries, preview, canSubmit };
}

export type SpecDraft = {
  runId: string;
  inputs: Array<{ path: string; format: string; source_dataset: string }>;
  knowledgeBases: Record<string, string | null>;
};

export type SpecResult =
  | { ok: true; spec: PipelineSpec }
  | { ok: false; errors: string[] };

/** Assemble the POST /pipelines body, refusing while any field is invalid. */
export function buildSpec(
  catalogue: OperatorDescriptor[],
  selected: ReadonlySet<string>,
  edited: Record<string, Record<string, unknown>>,
  draft: SpecDraft,
): SpecResult {
  const errors: string[] = [];
  const operators: PipelineSpec["operators"] = [];
  let selectedCount = 0;
  for (const descriptor of catalogue) {
    if (!selected.has(descriptor.name)) continue;
    selectedCount += 1;
    const params = buildOperatorParams(descriptor, edited[descriptor.name] ?? {});
    if (!params.ok) {
      errors.push(...params.errors);
    } else if (Object.keys(params.params).length > 0) {
      operators.push({ name: descriptor.name, params: params.params });
    } else {
      operators.push(descriptor.name);
    }
  }
  if (selectedCount === 0) {
    errors.push("select at least one operator");
  }
  if (draft.runId.trim() === "") {
    errors.push("run id must not be empty");
  }
  if (errors.length > 0) return { ok: false, errors };
  return {
    ok: true,
    spec: {
      run_id: draft.runId,
      inputs: draft.inputs,
      knowledge_bases: draft.knowledgeBases,
      operators,
    },
  };
}
