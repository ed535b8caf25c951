/**
 * Typed client for the diagnosis session service.
 *
 * Every response body is validated against the schemas below before any
 * caller sees it; the console renders only server-provided state and never
 * recomputes a number client-side.
 */

import { z } from "zod";

export const LedgerSchema = z.object({
  probes: z.number(),
  treatments: z.number(),
  inspections: z.number(),
  effort: z.number(),
  total: z.number(),
});

export interface ContextNode {
  id: string;
  kind: "subsystem" | "component";
  in_context: boolean;
  pruned: boolean;
  eliminated: boolean;
  replacement_cost: number;
  inspection_cost: number;
  children: ContextNode[];
}

export const ContextNodeSchema: z.ZodType<ContextNode> = z.lazy(() =>
  z.object({
    id: z.string(),
    kind: z.enum(["subsystem", "component"]),
    in_context: z.boolean(),
    pruned: z.boolean(),
    eliminated: z.boolean(),
    replacement_cost: z.number(),
    inspection_cost: z.number(),
    children: z.array(ContextNodeSchema),
  }),
);

export const RecommendationSchema = z.object({
  action: z.string(),
  testpoint: z.string().optional(),
  target: z.string().nullable().optional(),
  cost: z.number(),
});

export const TranscriptEventSchema = z
  .object({ event: z.string() })
  .passthrough();

export const MetaEstimatesSchema = z
  .object({
    X1: z.number().nullable(),
    X2: z.number().nullable(),
    Y1: z.number().nullable(),
    Y2: z.number().nullable(),
    u: z.number(),
    EV_FL: z.number().nullable(),
    EV_BFL: z.number().nullable(),
    chosen: z.string(),
  })
  .passthrough();

export const SessionViewSchema = z.object({
  session_id: z.string(),
  mode: z.enum(["simulated", "interactive"]),
  phase: z.enum(["running", "awaiting_probe", "awaiting_action_result", "done"]),
  context_tree: ContextNodeSchema,
  recommendation: RecommendationSchema.nullable(),
  ledger: LedgerSchema,
  transcript: z.array(TranscriptEventSchema),
  meta_estimates: MetaEstimatesSchema.nullable(),
});

export const SessionCreatedSchema = z.object({ session_id: z.string() });

export type Ledger = z.infer<typeof LedgerSchema>;
export type Recommendation = z.infer<typeof RecommendationSchema>;
export type TranscriptEvent = z.infer<typeof TranscriptEventSchema>;
export type MetaEstimates = z.infer<typeof MetaEstimatesSchema>;
export type SessionView = z.infer<typeof SessionViewSchema>;

export interface CreateSessionRequest {
  kb: string | Record<string, unknown>;
  mode: "simulated" | "interactive";
  fault?: string;
  inputs: number[] | Record<string, number>;
  observed?: Record<string, number>;
  config?: Record<string, unknown>;
  seed?: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class SchemaMismatchError extends Error {
  constructor(public readonly issues: string) {
    super(`response does not match the published schema: ${issues}`);
  }
}

async function request<T>(
  url: string,
  schema: z.ZodType<T>,
  init?: RequestInit,
): Promise<T> {
  const resp = await fetch(url, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: unknown };
      if (body.detail !== undefined) detail = JSON.stringify(body.detail);
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  const payload: unknown = await resp.json();
  const parsed = schema.safeParse(payload);
  if (!parsed.success) {
    throw new SchemaMismatchError(parsed.error.message);
  }
  return parsed.data;
}

export class SessionClient {
  constructor(private readonly baseUrl: string) {}

  createSession(body: CreateSessionRequest): Promise<{ session_id: string }> {
    return request(`${this.baseUrl}/api/sessions`, SessionCreatedSchema, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  getSession(id: string): Promise<SessionView> {
    return request(`${this.baseUrl}/api/sessions/${id}`, SessionViewSchema);
  }

  advance(id: string): Promise<SessionView> {
    return request(`${this.baseUrl}/api/sessions/${id}/advance`, SessionViewSchema, {
      method: "POST",
    });
  }

  submitProbeResult(id: string, testpoint: string, ok: boolean): Promise<SessionView> {
    return request(
      `${this.baseUrl}/api/sessions/${id}/probe-result`,
      SessionViewSchema,
      { method: "POST", body: JSON.stringify({ testpoint, ok }) },
    );
  }

  submitActionResult(id: string, deviceOk: boolean): Promise<SessionView> {
    return request(
      `${this.baseUrl}/api/sessions/${id}/action-result`,
      SessionViewSchema,
      { method: "POST", body: JSON.stringify({ device_ok: deviceOk }) },
    );
  }

  async deleteSession(id: string): Promise<void> {
    const resp = await fetch(`${this.baseUrl}/api/sessions/${id}`, {
      method: "DELETE",
    });
    if (!resp.ok) throw new ApiError(resp.status, resp.statusText);
  }
}
