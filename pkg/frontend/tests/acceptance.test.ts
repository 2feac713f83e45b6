import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { pipelineHtml, statsHtml } from "../src/dom.js";
import { buildPaletteModel, buildSpec } from "../src/palette.js";
import { buildPipelineModel } from "../src/pipeline.js";
import { buildStatsView } from "../src/stats.js";
import type { StatsPayload } from "../src/types.js";
import { catalogue, jsonResponse, SERVER_ORDER, statsFor } from "./helpers.js";

/**
 * End-to-end over a scripted API: five different palette selections,
 * clicked in five different orders. The rendered chain must equal the
 * order the API returned — character for character — and the stats
 * panel must show the payload's numbers untouched.
 */

type Scenario = {
  runId: string;
  clicked: string[]; // toggle order, deliberately not the server's
  serverOrder: string[]; // what the mock POST /pipelines returns
};

const SCENARIOS: Scenario[] = [
  {
    runId: "all-sixteen",
    clicked: [...SERVER_ORDER].reverse(),
    serverOrder: [...SERVER_ORDER],
  },
  {
    runId: "swap-pair",
    clicked: ["Deduplicator", "RobotCleaner"],
    serverOrder: ["RobotCleaner", "Deduplicator"],
  },
  {
    runId: "with-dependency",
    clicked: ["ExpertiseFilter", "Load", "Extract", "ComplexityFilter"],
    serverOrder: ["Extract", "ComplexityFilter", "ExpertiseFilter", "Load"],
  },
  {
    runId: "single-stage",
    clicked: ["Extract"],
    serverOrder: ["Extract"],
  },
  {
    runId: "mixed-five",
    clicked: ["Load", "TopicClustering", "Extract", "SyntacticCorrector", "Deduplicator"],
    serverOrder: ["Extract", "Deduplicator", "SyntacticCorrector", "TopicClustering", "Load"],
  },
];

function scriptedClient(scenario: Scenario, stats: StatsPayload): ApiClient {
  const { runId, serverOrder } = scenario;
  return new ApiClient((url, init) => {
    const method = init?.method ?? "GET";
    if (method === "POST" && url === "/pipelines") {
      return Promise.resolve(
        jsonResponse({ run_id: runId, status: "Pending", order: serverOrder }, 201),
      );
    }
    if (method === "POST" && url === `/pipelines/${runId}/run`) {
      return Promise.resolve(jsonResponse({ run_id: runId, status: "Running" }, 202));
    }
    if (url === `/runs/${runId}`) {
      return Promise.resolve(
        jsonResponse({
          run_id: runId,
          status: "Done",
          stage: serverOrder[serverOrder.length - 1] ?? null,
          completed: serverOrder,
          order: serverOrder,
          error: null,
        }),
      );
    }
    if (url === `/runs/${runId}/stats`) {
      return Promise.resolve(jsonResponse(stats));
    }
    return Promise.resolve(jsonResponse({ detail: `no route ${method} ${url}` }, 404));
  });
}

const stageNames = (html: string): string[] =>
  Array.from(html.matchAll(/data-stage="([^"]+)"/g), (match) => match[1] ?? "");

const cellValues = (html: string): string[] =>
  Array.from(html.matchAll(/<td>([^<]*)<\/td>/g), (match) => match[1] ?? "");

describe("scripted pipeline selections", () => {
  it.each(SCENARIOS)(
    "$runId: the chain shows the API's order and the panel its numbers",
    async (scenario) => {
      const stats = statsFor(scenario.runId, scenario.serverOrder);
      const api = scriptedClient(scenario, stats);

      // Palette: toggles in click order; the request body assembles fine.
      const selected = new Set(scenario.clicked);
      const model = buildPaletteModel(catalogue(), selected);
      expect(model.canSubmit).toBe(true);
      const request = buildSpec(catalogue(), selected, {}, {
        runId: scenario.runId,
        inputs: [
          { path: "access.log", format: "combined", source_dataset: "access" },
        ],
        knowledgeBases: {},
      });
      if (!request.ok) throw new Error(request.errors.join("; "));

      // Define, launch, observe. The order shown is the returned one.
      const created = await api.definePipeline(request.spec);
      expect(created.order).toEqual(scenario.serverOrder);
      await api.launch(created.run_id);
      const status = await api.runStatus(created.run_id);
      const chain = pipelineHtml(buildPipelineModel(status));
      expect(stageNames(chain)).toEqual(scenario.serverOrder);

      // Stats panel: every cell equals the payload value, verbatim.
      // statsFor plants rates unrelated to the counts, so any
      // client-side recomputation would break these strings.
      const panel = statsHtml(buildStatsView(await api.stats(created.run_id)));
      const expected = stats.operators.flatMap((row) => [
        row.name,
        String(row.input),
        String(row.trusted),
        String(row.untrusted),
        row.rate_of_trust.toFixed(2),
        String(row.duration_ms),
      ]);
      expect(cellValues(panel)).toEqual(expected);
      expect(panel).toContain(`<strong>${String(stats.final_trusted)}</strong>`);
      expect(panel).toContain(
        `<strong>${stats.overall_rate_of_trust.toFixed(2)}</strong>`,
      );
    },
  );
});
