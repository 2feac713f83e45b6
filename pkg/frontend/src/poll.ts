import type { ApiClient } from "./api.js";
import type { RunStatus } from "./types.js";

export type PollHandle = { stop: () => void };

/**
 * Poll a run's status once a second until it reaches Done or Failed,
 * reporting every response in arrival order. One second matches the
 * stage granularity of the engine; nothing changes faster than that.
 */
export function pollRunStatus(
  api: ApiClient,
  runId: string,
  onUpdate: (status: RunStatus) => void,
  onError: (error: unknown) => void = () => undefined,
  intervalMs = 1000,
): PollHandle {
  let inFlight = false;
  const timer = setInterval(async () => {
    if (inFlight) return; // a slow response must not pile up requests
    inFlight = true;
    try {
      const status = await api.runStatus(runId);
      onUpdate(status);
      if (status.status === "Done" || status.status === "Failed") {
        clearInterval(timer);
      }
    } catch (error) {
      clearInterval(timer);
      onError(error);
    } finally {
      inFlight = false;
    }
  }, intervalMs);
  return { stop: () => clearInterval(timer) };
}
