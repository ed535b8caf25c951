/** Page controller: session creation form, action wiring, periodic refresh. */

import { ApiError, SchemaMismatchError, SessionClient, SessionView } from "./api.js";
import { renderError, renderSession } from "./render.js";

const client = new SessionClient("");
let currentSession: string | null = null;
let pollTimer: number | null = null;

function container(): HTMLElement {
  return document.querySelector("#session") as HTMLElement;
}

function showError(err: unknown): void {
  const message =
    err instanceof SchemaMismatchError
      ? `Schema mismatch: ${err.issues}`
      : err instanceof ApiError
        ? err.message
        : String(err);
  renderError(container(), message);
}

async function refresh(view?: SessionView): Promise<void> {
  if (!currentSession) return;
  try {
    const v = view ?? (await client.getSession(currentSession));
    renderSession(container(), v, {
      onAdvance: () => void act(client.advance(currentSession!)),
      onProbeResult: (tp, ok) =>
        void act(
          client
            .submitProbeResult(currentSession!, tp, ok)
            .then(() => client.advance(currentSession!)),
        ),
      onActionResult: (ok) =>
        void act(
          client
            .submitActionResult(currentSession!, ok)
            .then(() => client.advance(currentSession!)),
        ),
    });
  } catch (err) {
    showError(err);
  }
}

async function act(next: Promise<SessionView>): Promise<void> {
  try {
    await refresh(await next);
  } catch (err) {
    showError(err);
  }
}

function startPolling(): void {
  if (pollTimer !== null) window.clearInterval(pollTimer);
  pollTimer = window.setInterval(() => void refresh(), 3000);
}

async function createFromForm(event: Event): Promise<void> {
  event.preventDefault();
  const form = event.currentTarget as HTMLFormElement;
  const data = new FormData(form);
  const mode = (data.get("mode") as string) === "interactive"
    ? "interactive"
    : "simulated";
  const inputs = (data.get("inputs") as string)
    .split(",")
    .map((b) => parseInt(b.trim(), 10));
  const body: Parameters<SessionClient["createSession"]>[0] = {
    kb: data.get("kb") as string,
    mode,
    inputs,
  };
  const fault = (data.get("fault") as string).trim();
  if (mode === "simulated" && fault) body.fault = fault;
  if (mode === "interactive") {
    const observed: Record<string, number> = {};
    for (const part of (data.get("observed") as string).split(",")) {
      const [net, bit] = part.split("=");
      if (net && bit !== undefined) observed[net.trim()] = parseInt(bit, 10);
    }
    body.observed = observed;
  }
  try {
    const created = await client.createSession(body);
    currentSession = created.session_id;
    await act(client.advance(currentSession));
    startPolling();
  } catch (err) {
    showError(err);
  }
}

export function install(): void {
  const form = document.querySelector("#create-form") as HTMLFormElement;
  form.addEventListener("submit", (e) => void createFromForm(e));
}

if (typeof document !== "undefined" && document.querySelector("#create-form")) {
  install();
}
