/**
 * Session flow helpers shared by the page controller and scripted tests.
 * No decision logic lives here: the flow only moves a session between
 * checkpoints and relays a technician's answers.
 */

import { SessionClient, SessionView } from "./api.js";

/** Advance until the session needs input or finishes. */
export async function advanceToInput(
  client: SessionClient,
  id: string,
  limit = 500,
): Promise<SessionView> {
  let view = await client.getSession(id);
  for (let i = 0; i < limit; i++) {
    if (view.phase !== "running") return view;
    view = await client.advance(id);
  }
  throw new Error("session did not reach an input point");
}

/** Answer the pending probe question and advance to the next checkpoint. */
export async function submitProbeResult(
  client: SessionClient,
  id: string,
  testpoint: string,
  ok: boolean,
): Promise<SessionView> {
  await client.submitProbeResult(id, testpoint, ok);
  return advanceToInput(client, id);
}

/** Report the device status after the recommended action and advance. */
export async function submitActionResult(
  client: SessionClient,
  id: string,
  deviceOk: boolean,
): Promise<SessionView> {
  await client.submitActionResult(id, deviceOk);
  return advanceToInput(client, id);
}

/** Run a simulated session to completion, one checkpoint per advance. */
export async function runSimulatedToEnd(
  client: SessionClient,
  id: string,
  limit = 500,
): Promise<SessionView> {
  let view = await client.getSession(id);
  for (let i = 0; i < limit; i++) {
    if (view.phase === "done") return view;
    view = await client.advance(id);
  }
  throw new Error("simulated session did not finish");
}

/**
 * A technician answer source. Scripted tests replay recorded answers; the
 * page controller resolves these from button clicks.
 */
export interface AnswerSource {
  probe(testpoint: string, cost: number): Promise<boolean>;
  action(action: string, target: string | null, cost: number): Promise<boolean>;
}

/** Drive an interactive session with an answer source until it finishes. */
export async function driveInteractive(
  client: SessionClient,
  id: string,
  answers: AnswerSource,
  limit = 500,
): Promise<SessionView> {
  let view = await advanceToInput(client, id);
  for (let i = 0; i < limit; i++) {
    if (view.phase === "done") return view;
    const rec = view.recommendation;
    if (!rec) throw new Error(`phase ${view.phase} without a recommendation`);
    if (view.phase === "awaiting_probe") {
      const ok = await answers.probe(rec.testpoint as string, rec.cost);
      view = await submitProbeResult(client, id, rec.testpoint as string, ok);
    } else {
      const ok = await answers.action(rec.action, rec.target ?? null, rec.cost);
      view = await submitActionResult(client, id, ok);
    }
  }
  throw new Error("interactive session did not finish");
}

/**
 * Reconstruct the oracle answers a transcript embodies, in question order:
 * probe results, chip-inspection outcomes, and whether each terminal
 * replace/nothing left the device working.
 */
export function answersFromTranscript(
  transcript: Array<Record<string, unknown>>,
): boolean[] {
  const answers: boolean[] = [];
  transcript.forEach((event, i) => {
    switch (event.event) {
      case "Probe":
        answers.push(event.result === "ok");
        break;
      case "ChipInspected":
        answers.push(event.cleared === true);
        break;
      case "Treatment": {
        if (event.kind === "remove_bridge") break; // implied by ChipInspected
        const next = transcript[i + 1];
        answers.push(next !== undefined && next.event === "DeviceOk");
        break;
      }
      default:
        break;
    }
  });
  return answers;
}
