import type { OperatorDescriptor, ParamSchema } from "./types.js";

/**
 * Parameter forms are generated from the operator's parameter schema as
 * served by GET /operators — enum arrays become checkbox groups, plain
 * enums become selects, bounded numbers become number inputs.
 */
export type FormField =
  | {
      kind: "number";
      name: string;
      integer: boolean;
      minimum?: number;
      maximum?: number;
      value: number | null;
    }
  | { kind: "select"; name: string; options: string[]; value: string | null }
  | { kind: "checkboxes"; name: string; options: string[]; value: string[] }
  | { kind: "list"; name: string; value: string[] | null };

export function fieldFor(name: string, schema: ParamSchema): FormField {
  if (schema.type === "array") {
    const options = schema.items?.enum;
    if (options !== undefined) {
      return {
        kind: "checkboxes",
        name,
        options,
        value: Array.isArray(schema.default) ? [...schema.default] : [],
      };
    }
    return {
      kind: "list",
      name,
      value: Array.isArray(schema.default) ? [...schema.default] : null,
    };
  }
  if (schema.type === "string") {
    return {
      kind: "select",
      name,
      options: schema.enum ?? [],
      value: typeof schema.default === "string" ? schema.default : null,
    };
  }
  return {
    kind: "number",
    name,
    integer: schema.type === "integer",
    minimum: schema.minimum,
    maximum: schema.maximum,
    value: typeof schema.default === "number" ? schema.default : null,
  };
}

export function fieldsFor(descriptor: OperatorDescriptor): FormField[] {
  return Object.entries(descriptor.params).map(([name, schema]) =>
    fieldFor(name, schema),
  );
}

export type Validated =
  | { ok: true; value: unknown }
  | { ok: false; error: string };

/** Client-side check of one field value against its schema bounds. */
export function validateField(field: FormField, value: unknown): Validated {
  if (value === null || value === undefined) {
    return { ok: true, value: null };
  }
  switch (field.kind) {
    case "number": {
      const num = typeof value === "string" ? Number(value) : value;
      if (typeof num !== "number" || !Number.isFinite(num)) {
        return { ok: false, error: `${field.name} must be a number` };
      }
      if (field.integer && !Number.isInteger(num)) {
        return { ok: false, error: `${field.name} must be an integer` };
      }
      if (field.minimum !== undefined && num < field.minimum) {
        return { ok: false, error: `${field.name} must be >= ${field.minimum}` };
      }
      if (field.maximum !== undefined && num > field.maximum) {
        return { ok: false, error: `${field.name} must be <= ${field.maximum}` };
      }
      return { ok: true, value: num };
    }
    case "select": {
      if (typeof value !== "string" || !field.options.includes(value)) {
        return {
          ok: false,
          error: `${field.name} must be one of ${field.options.join(", ")}`,
        };
      }
      return { ok: true, value };
    }
    case "checkboxes": {
      if (!Array.isArray(value)) {
        return { ok: false, error: `${field.name} must be a list` };
      }
      const bad = value.find((item) => !field.options.includes(String(item)));
      if (bad !== undefined) {
        return { ok: false, error: `${field.name}: unknown choice ${bad}` };
      }
      return { ok: true, value: value.map(String) };
    }
    case "list": {
      if (!Array.isArray(value)) {
        return { ok: false, error: `${field.name} must be a list` };
      }
      return { ok: true, value: value.map(String) };
    }
  }
}

export type ParamsResult =
  | { ok: true; params: Record<string, unknown> }
  | { ok: false; errors: string[] };

/**
 * Validate every edited value for one operator; anything invalid blocks
 * submission (the server would reject it too — this just fails sooner).
 */
export function buildOperatorParams(
  descriptor: OperatorDescriptor,
  edited: Record<string, unknown>,
): ParamsResult {
  const fields = new Map(
    fieldsFor(descriptor).map((field) => [field.name, field]),
  );
  const params: Record<string, unknown> = {};
  const errors: string[] = [];
  for (const [name, value] of Object.entries(edited)) {
    const field = fields.get(name);
    if (field === undefined) {
      errors.push(`${descriptor.name} has no parameter ${name}`);
      continue;
    }
    const checked = validateField(field, value);
    if (checked.ok) {
      if (checked.value !== null) params[name] = checked.value;
    } else {
      errors.push(checked.error);
    }
  }
  return errors.length > 0 ? { ok: false, errors } : { ok: true, params };
}
