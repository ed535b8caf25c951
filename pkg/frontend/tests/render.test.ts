// @vitest-environment jsdom
/** Rendering: direct mapping from the view payload, no recomputation. */

import { describe, expect, test } from "vitest";

import type { SessionView } from "../src/api.js";
import { renderError, renderSession } from "../src/render.js";

function baseView(overrides: Partial<SessionView> = {}): SessionView {
  return {
    session_id: "abc123",
    mode: "interactive",
    phase: "awaiting_probe",
    context_tree: {
      id: "D",
      kind: "subsystem",
      in_context: false,
      pruned: false,
      eliminated: false,
      replacement_cost: 60,
      inspection_cost: 2,
      children: [
        {
          id: "Y1-sub",
          kind: "subsystem",
          in_context: true,
          pruned: false,
          eliminated: false,
          replacement_cost: 30,
          inspection_cost: 2,
          children: [],
        },
      ],
    },
    recommendation: { action: "probe", testpoint: "P1", cost: 1 },
    ledger: { probes: 1, treatments: 0, inspections: 2, effort: 0, total: 3 },
    transcript: [
      { event: "PathwayChosen", pathway: "FL" },
      {
        event: "ModelBuilt",
        pathway: "FL",
        summary: {
          treatments: [
            { label: "nothing", cost: 0 },
            { label: "repair:P1-sub", cost: 7 },
          ],
        },
      },
    ],
    meta_estimates: {
      X1: 10,
      X2: 5,
      Y1: 2,
      Y2: 3,
      u: 0.001,
      EV_FL: 12.4,
      EV_BFL: 15,
      chosen: "FL",
    },
    ...overrides,
  };
}

function mount(view: SessionView, handlers = {}) {
  const container = document.createElement("div");
  document.body.appendChild(container);
  renderSession(container, view, handlers);
  return container;
}

describe("renderSession", () => {
  test("awaiting_probe shows ok / not-ok buttons wired to the testpoint", () => {
    const calls: Array<[string, boolean]> = [];
    const container = mount(baseView(), {
      onProbeResult: (tp: string, ok: boolean) => calls.push([tp, ok]),
    });
    const ok = container.querySelector("button.probe-ok") as HTMLButtonElement;
    const notOk = container.querySelector("button.probe-not-ok") as HTMLButtonElement;
    expect(ok).not.toBeNull();
    expect(notOk).not.toBeNull();
    ok.click();
    notOk.click();
    expect(calls).toEqual([
      ["P1", true],
      ["P1", false],
    ]);
  });

  test("done phase shows the terminal banner with the total cost", () => {
    const container = mount(
      baseView({
        phase: "done",
        recommendation: null,
        ledger: { probes: 2, treatments: 10, inspections: 4, effort: 0, total: 16 },
      }),
    );
    const banner = container.querySelector(".done-banner");
    expect(banner?.textContent).toContain("16");
    expect(container.querySelector("button.probe-ok")).toBeNull();
  });

  test("meta panel shows the server's numbers verbatim", () => {
    const container = mount(baseView());
    expect(container.querySelector(".meta-evfl")?.textContent).toBe("12.4");
    expect(container.querySelector(".meta-evbfl")?.textContent).toBe("15");
    expect(container.querySelector(".meta-chosen")?.textContent).toBe("FL");
  });

  test("ledger totals equal the payload", () => {
    const container = mount(baseView());
    const total = container.querySelector("tr.total td.amount");
    expect(total?.textContent).toBe("3");
  });

  test("context nodes carry highlight classes", () => {
    const container = mount(baseView());
    const highlighted = container.querySelectorAll(".node-label.in-context");
    expect(highlighted.length).toBe(1);
    expect(highlighted[0].textContent).toBe("Y1-sub");
  });

  test("alternatives from the last built model are listed", () => {
    const container = mount(baseView());
    const alts = Array.from(
      container.querySelectorAll(".alternatives li"),
    ).map((li) => li.textContent);
    expect(alts).toEqual(["nothing (0)", "repair:P1-sub (7)"]);
  });

  test("rendering is idempotent for the same view", () => {
    const view = baseView();
    const a = mount(view);
    const b = mount(view);
    expect(a.innerHTML).toBe(b.innerHTML);
  });

  test("action result buttons appear in awaiting_action_result", () => {
    const calls: boolean[] = [];
    const container = mount(
      baseView({
        phase: "awaiting_action_result",
        recommendation: { action: "replace", target: "G1", cost: 5 },
      }),
      { onActionResult: (ok: boolean) => calls.push(ok) },
    );
    (container.querySelector("button.device-ok") as HTMLButtonElement).click();
    (container.querySelector("button.device-faulty") as HTMLButtonElement).click();
    expect(calls).toEqual([true, false]);
  });

  test("error banner renders", () => {
    const container = mount(baseView());
    renderError(container, "Schema mismatch: boom");
    expect(container.querySelector(".error-banner")?.textContent).toContain(
      "Schema mismatch",
    );
  });
});
