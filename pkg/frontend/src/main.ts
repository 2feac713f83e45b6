import { ApiClient, ApiError } from "./api.js";
import { paletteHtml, pipelineHtml, sampleHtml, statsHtml } from "./dom.js";
import { buildPaletteModel, buildSpec, type SpecDraft } from "./palette.js";
import { buildPipelineModel } from "./pipeline.js";
import { pollRunStatus, type PollHandle } from "./poll.js";
import { buildSampleView, buildStatsView } from "./stats.js";
import type { OperatorDescriptor, RunStatus } from "./types.js";

const api = new ApiClient();

const zone = (id: string): HTMLElement => {
  const element = document.getElementById(id);
  if (element === null) throw new Error(`missing element #${id}`);
  return element;
};

// Mutable page state. The server stays authoritative for anything
// derived (stage order, rates); this is only what the user typed.
let catalogue: OperatorDescriptor[] = [];
const selected = new Set<string>();
const edited: Record<string, Record<string, unknown>> = {};
let lastStatus: RunStatus | null = null;
let selectedStage: string | null = null;
let poller: PollHandle | null = null;

function renderPalette(): void {
  const model = buildPaletteModel(catalogue, selected, edited);
  zone("palette").innerHTML = paletteHtml(model);
  const submit = zone("define") as HTMLButtonElement;
  submit.disabled = !model.canSubmit;
}

function renderPipeline(): void {
  if (lastStatus === null) return;
  zone("pipeline").innerHTML = pipelineHtml(
    buildPipelineModel(lastStatus, selectedStage),
  );
}

function showError(message: string, retry: (() => void) | null): void {
  const banner = zone("banner");
  banner.innerHTML = `<p class="error">${message}</p>`;
  if (retry !== null) {
    const button = document.createElement("button");
    button.textContent = "retry";
    button.addEventListener("click", () => {
      banner.innerHTML = "";
      retry();
    });
    banner.appendChild(button);
  }
}

async function loadCatalogue(): Promise<void> {
  try {
    catalogue = (await api.operators()).operators;
    renderPalette();
  } catch (error) {
    // Retryable: the palette is useless without the catalogue.
    showError(describe(error), loadCatalogue);
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.status}: ${error.detail}`;
  return error instanceof Error ? error.message : String(error);
}

function draftFromForm(): SpecDraft {
  const runId = (zone("run-id") as HTMLInputElement).value;
  const path = (zone("log-path") as HTMLInputElement).value;
  const secondPath = (zone("log-path-2") as HTMLInputElement).value;
  const format = (zone("log-format") as HTMLSelectElement).value;
  const stem = (full: string) =>
    full.split("/").pop()?.replace(/\.[^.]*$/, "") ?? full;
  const inputs = [path, secondPath]
    .filter((candidate) => candidate.trim() !== "")
    .map((candidate, index) => ({
      path: candidate,
      format,
      source_dataset: index === 0 ? stem(candidate) : `${stem(candidate)}-${index + 1}`,
    }));
  const knowledgeBases: Record<string, string | null> = {};
  for (const name of ["blacklist", "organisations", "topics", "vocabulary"]) {
    const value = (zone(`kb-${name}`) as HTMLInputElement).value.trim();
    knowledgeBases[name] = value === "" ? null : value;
  }
  return { runId, inputs, knowledgeBases };
}

async function defineAndRun(): Promise<void> {
  const result = buildSpec(catalogue, selected, edited, draftFromForm());
  if (!result.ok) {
    showError(result.errors.join("; "), null);
    return;
  }
  poller?.stop();
  selectedStage = null;
  zone("stats").innerHTML = "";
  try {
    const created = await api.definePipeline(result.spec);
    await api.launch(created.run_id);
    watch(created.run_id);
  } catch (error) {
    showError(describe(error), () => void defineAndRun());
  }
}

function watch(runId: string): void {
  poller = pollRunStatus(
    api,
    runId,
    (status) => {
      lastStatus = status;
      renderPipeline();
      if (status.status === "Done") void showStats(runId);
    },
    (error) => {
      if (error instanceof ApiError && error.status === 404) {
        zone("pipeline").innerHTML = `<p class="error">run not found</p>`;
      } else {
        showError(describe(error), () => watch(runId));
      }
    },
  );
}

async function showStats(runId: string): Promise<void> {
  try {
    zone("stats").innerHTML = statsHtml(buildStatsView(await api.stats(runId)));
  } catch (error) {
    showError(describe(error), () => void showStats(runId));
  }
}

async function showSample(runId: string, operator: string): Promise<void> {
  try {
    const view = buildSampleView(await api.sample(runId, operator));
    zone("sample").innerHTML = sampleHtml(view);
  } catch (error) {
    zone("sample").innerHTML = `<p class="error">${describe(error)}</p>`;
  }
}

function wireEvents(): void {
  zone("palette").addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement;
    const toggled = target.dataset["toggle"];
    if (toggled !== undefined) {
      if (target.checked) selected.add(toggled);
      else selected.delete(toggled);
      renderPalette();
      return;
    }
    const operator = target.dataset["operator"];
    const param = target.dataset["param"];
    if (operator === undefined || param === undefined) return;
    const perOperator = (edited[operator] ??= {});
    if (target.type === "checkbox") {
      const group = zone("palette").querySelectorAll<HTMLInputElement>(
        `input[data-operator="${operator}"][data-param="${param}"]:checked`,
      );
      perOperator[param] = Array.from(group).map((box) => box.value);
    } else if (target.dataset["list"] !== undefined) {
      perOperator[param] = target.value
        .split(",")
        .map((item) => item.trim())
        .filter((item) => item !== "");
    } else if (target.value === "") {
      delete perOperator[param];
    } else {
      perOperator[param] = target.value;
    }
    renderPalette();
  });

  zone("define").addEventListener("click", () => void defineAndRun());

  zone("pipeline").addEventListener("click", (event) => {
    const item = (event.target as HTMLElement).closest<HTMLElement>("[data-stage]");
    if (item === null || lastStatus === null) return;
    selectedStage = item.dataset["stage"] ?? null;
    renderPipeline();
    if (selectedStage !== null) {
      void showSample(lastStatus.run_id, selectedStage);
    }
  });
}

wireEvents();
void loadCatalogue();
