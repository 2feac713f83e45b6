import { describe, expect, it } from "vitest";

import {
  buildOperatorParams,
  fieldFor,
  fieldsFor,
  validateField,
} from "../src/forms.js";
import { descriptor } from "./helpers.js";

describe("schema to form field mapping", () => {
  it("turns an enum array into a checkbox group with the default checked", () => {
    const field = fieldFor("keep", {
      type: "array",
      items: { type: "string", enum: ["Business", "Academic", "Unknown"] },
      default: ["Business", "Academic"],
    });
    expect(field).toEqual({
      kind: "checkboxes",
      name: "keep",
      options: ["Business", "Academic", "Unknown"],
      value: ["Business", "Academic"],
    });
  });

  it("turns a plain array into a free list", () => {
    const field = fieldFor("agent_patterns", {
      type: "array",
      items: { type: "string" },
    });
    expect(field).toEqual({ kind: "list", name: "agent_patterns", value: null });
  });

  it("turns a string enum into a select with its default", () => {
    const field = fieldFor("mode", {
      type: "string",
      enum: ["exact", "canonical"],
      default: "canonical",
    });
    expect(field).toEqual({
      kind: "select",
      name: "mode",
      options: ["exact", "canonical"],
      value: "canonical",
    });
  });

  it("keeps numeric bounds and the integer flag", () => {
    const field = fieldFor("min_session_length", {
      type: "integer",
      minimum: 2,
      default: 10,
    });
    expect(field).toEqual({
      kind: "number",
      name: "min_session_length",
      integer: true,
      minimum: 2,
      maximum: undefined,
      value: 10,
    });
  });

  it("builds one field per declared parameter", () => {
    const fields = fieldsFor(descriptor("RobotCleaner"));
    expect(fields.map((field) => field.name)).toEqual([
      "session_gap_minutes",
      "rate_threshold",
      "regularity_cv",
      "min_session_length",
      "agent_patterns",
    ]);
  });
});

describe("client-side validation", () => {
  const threshold = fieldFor("threshold", {
    type: "number",
    minimum: 0,
    maximum: 1,
    default: 0.8,
  });

  it("rejects a similarity threshold above its maximum", () => {
    expect(validateField(threshold, 1.5)).toEqual({
      ok: false,
      error: "threshold must be <= 1",
    });
  });

  it("coerces the string an input element yields before checking", () => {
    expect(validateField(threshold, "1.5")).toEqual({
      ok: false,
      error: "threshold must be <= 1",
    });
    expect(validateField(threshold, "0.4")).toEqual({ ok: true, value: 0.4 });
  });

  it("rejects values below the minimum and non-numbers", () => {
    expect(validateField(threshold, -0.1)).toEqual({
      ok: false,
      error: "threshold must be >= 0",
    });
    expect(validateField(threshold, "plenty")).toEqual({
      ok: false,
      error: "threshold must be a number",
    });
  });

  it("rejects fractional values for integer parameters", () => {
    const field = fieldFor("max_distance", { type: "integer", minimum: 1 });
    expect(validateField(field, 2.5)).toEqual({
      ok: false,
      error: "max_distance must be an integer",
    });
  });

  it("rejects checkbox choices outside the schema enum", () => {
    const field = fieldFor("keep", {
      type: "array",
      items: { type: "string", enum: ["Business", "Academic", "Unknown"] },
    });
    expect(validateField(field, ["Business", "Governmental"])).toEqual({
      ok: false,
      error: "keep: unknown choice Governmental",
    });
  });

  it("treats an empty value as not-provided", () => {
    expect(validateField(threshold, null)).toEqual({ ok: true, value: null });
  });
});

describe("assembling one operator's params", () => {
  it("blocks the whole parameter set when any edit is out of range", () => {
    const result = buildOperatorParams(descriptor("SchemaRanking"), {
      threshold: 1.5,
    });
    expect(result).toEqual({ ok: false, errors: ["threshold must be <= 1"] });
  });

  it("passes through valid edits and drops cleared ones", () => {
    const result = buildOperatorParams(descriptor("SchemaRanking"), {
      threshold: "0.9",
    });
    expect(result).toEqual({ ok: true, params: { threshold: 0.9 } });
  });

  it("reports parameter names the operator does not declare", () => {
    const result = buildOperatorParams(descriptor("Deduplicator"), {
      vigour: 11,
    });
    expect(result).toEqual({
      ok: false,
      errors: ["Deduplicator has no parameter vigour"],
    });
  });
});
