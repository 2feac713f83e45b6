import type { FormField } from "./forms.js";
import type { PaletteModel } from "./palette.js";
import type { PipelineModel } from "./pipeline.js";
import type { SampleView, StatsView } from "./stats.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fieldHtml(operator: string, field: FormField): string {
  const id = `param-${operator}-${field.name}`;
  switch (field.kind) {
    case "number": {
      const bounds = [
        field.minimum !== undefined ? `min="${field.minimum}"` : "",
        field.maximum !== undefined ? `max="${field.maximum}"` : "",
        field.integer ? 'step="1"' : 'step="any"',
      ].join(" ");
      const value = field.value === null ? "" : `value="${field.value}"`;
      return `<label for="${id}">${field.name}</label>
        <input type="number" id="${id}" data-operator="${operator}" data-param="${field.name}" ${bounds} ${value}>`;
    }
    case "select": {
      const options = field.options
        .map(
          (option) =>
            `<option ${option === field.value ? "selected" : ""}>${escapeHtml(option)}</option>`,
        )
        .join("");
      return `<label for="${id}">${field.name}</label>
        <select id="${id}" data-operator="${operator}" data-param="${field.name}">${options}</select>`;
    }
    case "checkboxes":
      return field.options
        .map((option) => {
          const checked = field.value.includes(option) ? "checked" : "";
          return `<label><input type="checkbox" data-operator="${operator}" data-param="${field.name}" value="${escapeHtml(option)}" ${checked}> ${escapeHtml(option)}</label>`;
        })
        .join("\n");
    case "list": {
      const value = field.value === null ? "" : escapeHtml(field.value.join(", "));
      return `<label for="${id}">${field.name}</label>
        <input type="text" id="${id}" data-operator="${operator}" data-param="${field.name}" data-list="1" value="${value}" placeholder="comma-separated">`;
    }
  }
}

export function paletteHtml(model: PaletteModel): string {
  const entries = model.entries
    .map((entry) => {
      const fields = entry.fields
        .map((field) => fieldHtml(entry.name, field))
        .join("\n");
      const errors = entry.errors
        .map((error) => `<p class="error">${escapeHtml(error)}</p>`)
        .join("");
      const badges = [
        entry.requires.length > 0
          ? `<small>requires ${entry.requires.join(", ")}</small>`
          : "",
        entry.needsSecondLog ? "<small>needs a second log</small>" : "",
      ].join(" ");
      return `<details class="operator ${entry.selected ? "selected" : ""}">
        <summary>
          <input type="checkbox" data-toggle="${entry.name}" ${entry.selected ? "checked" : ""}>
          <strong>${entry.name}</strong> ${badges}
          <span>${escapeHtml(entry.summary)}</span>
        </summary>
        <div class="params">${fields}${errors}</div>
      </details>`;
    })
    .join("\n");
  const preview =
    model.preview.length > 0
      ? `<p class="preview">plan: ${model.preview.join(" → ")}</p>`
      : "<p class=\"preview\">no operators selected</p>";
  return `${entries}\n${preview}`;
}

export function pipelineHtml(model: PipelineModel): string {
  const stages = model.stages
    .map(
      (stage) =>
        `<li class="stage ${stage.state} ${stage.selected ? "selected" : ""}" data-stage="${stage.name}">
          <span class="pos">${stage.position + 1}</span> ${stage.name}
        </li>`,
    )
    .join("\n");
  const error =
    model.error === null
      ? ""
      : `<p class="error">${escapeHtml(model.error)}</p>`;
  return `<ol class="chain" data-status="${model.status}">${stages}</ol>${error}`;
}

export function statsHtml(view: StatsView): string {
  const rows = view.rows
    .map(
      (row) => `<tr data-stage="${row.name}">
        <td>${row.name}</td><td>${row.input}</td><td>${row.trusted}</td>
        <td>${row.untrusted}</td><td>${row.rate}</td><td>${row.durationMs}</td>
      </tr>`,
    )
    .join("\n");
  return `<table class="stats">
    <thead><tr><th>operator</th><th>input</th><th>trusted</th><th>untrusted</th><th>rate</th><th>ms</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
  <p class="overall">final trusted: <strong>${view.finalTrusted}</strong>,
    overall rate: <strong>${view.overallRate}</strong></p>`;
}

export function sampleHtml(view: SampleView): string {
  const list = (queries: SampleView["trusted"]) =>
    queries
      .map(
        (query) =>
          `<li><code>${query.id}</code> ${escapeHtml(query.text)}</li>`,
      )
      .join("\n");
  return `<h3>${view.operator}</h3>
  <h4>trusted</h4><ul>${list(view.trusted)}</ul>
  <h4>untrusted</h4><ul>${list(view.untrusted)}</ul>`;
}
