import type { RunStatus } from "./types.js";

export type StageState = "pending" | "active" | "done" | "failed";

export type StageNode = {
  name: string;
  position: number;
  state: StageState;
  selected: boolean;
};

export type PipelineModel = {
  stages: StageNode[];
  status: RunStatus["status"];
  error: string | null;
};

/**
 * Zone (b): the ordered stage chain. The order is rendered exactly as
 * the API returned it — this function never sorts, inserts or drops a
 * stage. While Running, the stage after the last completed one is the
 * active one; on failure it is the failed one.
 */
export function buildPipelineModel(
  status: RunStatus,
  selectedStage: string | null = null,
): PipelineModel {
  const completed = new Set(status.completed);
  const frontier = status.completed.length;
  const stages = status.order.map((name, position) => {
    let state: StageState = "pending";
    if (completed.has(name)) {
      state = "done";
    } else if (position === frontier && status.status === "Running") {
      state = "active";
    } else if (position === frontier && status.status === "Failed") {
      state = "failed";
    }
    return { name, position, state, selected: name === selectedStage };
  });
  return { stages, status: status.status, error: status.error };
}
