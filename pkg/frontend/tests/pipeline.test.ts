import { describe, expect, it } from "vitest";

import { pipelineHtml } from "../src/dom.js";
import { buildPipelineModel } from "../src/pipeline.js";
import { runStatus } from "./helpers.js";

describe("pipeline view", () => {
  it("renders exactly the order the server returned, never its own", () => {
    // Deliberately strange order: if the client sorted, inserted or
    // dropped anything, this mapping would not survive untouched.
    const order = ["Load", "Extract", "Deduplicator", "RobotCleaner"];
    const model = buildPipelineModel(runStatus({ order }));
    expect(model.stages.map((stage) => stage.name)).toEqual(order);
    expect(model.stages.map((stage) => stage.position)).toEqual([0, 1, 2, 3]);
  });

  it("shows three selected operators as a three-node chain", () => {
    const model = buildPipelineModel(runStatus());
    expect(model.stages).toHaveLength(3);
    expect(model.stages.every((stage) => stage.state === "pending")).toBe(true);
  });

  it("marks completed stages done and the frontier active while running", () => {
    const status = runStatus({
      status: "Running",
      stage: "Deduplicator",
      completed: ["Extract"],
    });
    const model = buildPipelineModel(status);
    expect(model.stages.map((stage) => stage.state)).toEqual([
      "done",
      "active",
      "pending",
    ]);
  });

  it("marks every stage done once the run is done", () => {
    const status = runStatus({
      status: "Done",
      completed: ["Extract", "Deduplicator", "Load"],
    });
    const model = buildPipelineModel(status);
    expect(model.stages.every((stage) => stage.state === "done")).toBe(true);
  });

  it("marks the frontier stage failed and carries the error message", () => {
    const status = runStatus({
      status: "Failed",
      completed: ["Extract"],
      error: "Deduplicator: store unavailable",
    });
    const model = buildPipelineModel(status);
    expect(model.stages.map((stage) => stage.state)).toEqual([
      "done",
      "failed",
      "pending",
    ]);
    expect(model.error).toBe("Deduplicator: store unavailable");

    const html = pipelineHtml(model);
    expect(html).toContain('class="stage failed');
    expect(html).toContain("Deduplicator: store unavailable");
  });

  it("flags only the clicked stage as selected", () => {
    const model = buildPipelineModel(runStatus(), "Deduplicator");
    expect(
      model.stages.filter((stage) => stage.selected).map((stage) => stage.name),
    ).toEqual(["Deduplicator"]);
  });
});
