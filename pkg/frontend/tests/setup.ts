/** Spawns the Python session service for the test run. */

import { spawn, type ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";
import path from "node:path";

export const BASE_URL = "http://127.0.0.1:8791";

let service: ChildProcess | undefined;

export async function setup(): Promise<void> {
  const repoRoot = path.resolve(
    path.dirname(fileURLToPath(import.meta.url)),
    "..",
    "..",
  );
  service = spawn(
    "python3",
    ["-m", "uvicorn", "hierdx.service:app", "--host", "127.0.0.1",
     "--port", "8791", "--log-level", "warning"],
    { cwd: repoRoot, stdio: "ignore" },
  );
  for (let i = 0; i < 200; i++) {
    try {
      const resp = await fetch(`${BASE_URL}/openapi.json`);
      if (resp.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("session service did not come up on :8791");
}

export async function teardown(): Promise<void> {
  service?.kill();
}
