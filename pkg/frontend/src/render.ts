/**
 * DOM rendering for a session view. Pure: the same view renders to the same
 * DOM, and every number shown comes verbatim from the server payload.
 */

import {
  ContextNode,
  MetaEstimates,
  Recommendation,
  SessionView,
  TranscriptEvent,
} from "./api.js";

export interface Handlers {
  onAdvance?: () => void;
  onProbeResult?: (testpoint: string, ok: boolean) => void;
  onActionResult?: (deviceOk: boolean) => void;
}

function el(
  doc: Document,
  tag: string,
  className?: string,
  text?: string,
): HTMLElement {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function money(x: number): string {
  return Number.isInteger(x) ? String(x) : String(x);
}

function renderTree(doc: Document, node: ContextNode): HTMLElement {
  const li = el(doc, "li");
  const label = el(doc, "span", "node-label", node.id);
  label.classList.add(node.kind);
  if (node.in_context) label.classList.add("in-context");
  if (node.pruned) label.classList.add("pruned");
  if (node.eliminated) label.classList.add("eliminated");
  li.appendChild(label);
  if (node.children.length) {
    const ul = el(doc, "ul");
    for (const child of node.children) ul.appendChild(renderTree(doc, child));
    li.appendChild(ul);
  }
  return li;
}

function describeRecommendation(rec: Recommendation): string {
  if (rec.action === "probe") return `Probe testpoint ${rec.testpoint}`;
  if (rec.action === "replace") return `Replace ${rec.target}`;
  if (rec.action === "inspect_chip")
    return `Inspect chip ${rec.target} and remove any bridge found`;
  if (rec.action === "nothing") return "Do nothing";
  return `${rec.action} ${rec.target ?? ""}`.trim();
}

function lastModelSummary(
  transcript: TranscriptEvent[],
): Record<string, unknown> | null {
  for (let i = transcript.length - 1; i >= 0; i--) {
    if (transcript[i].event === "ModelBuilt") {
      return (transcript[i] as Record<string, unknown>).summary as Record<
        string,
        unknown
      >;
    }
  }
  return null;
}

function renderRecommendation(
  doc: Document,
  view: SessionView,
  handlers: Handlers,
): HTMLElement {
  const card = el(doc, "section", "card recommendation");
  card.appendChild(el(doc, "h2", undefined, "Recommendation"));
  const rec = view.recommendation;
  if (view.phase === "done") {
    const banner = el(
      doc,
      "p",
      "done-banner",
      `Session complete. Total cost ${money(view.ledger.total)}.`,
    );
    card.appendChild(banner);
    return card;
  }
  if (!rec) {
    card.appendChild(el(doc, "p", "idle", "No pending recommendation; advance."));
    if (handlers.onAdvance) {
      const btn = el(doc, "button", "advance", "Advance") as HTMLButtonElement;
      btn.addEventListener("click", () => handlers.onAdvance!());
      card.appendChild(btn);
    }
    return card;
  }
  card.appendChild(
    el(doc, "p", "action", `${describeRecommendation(rec)} (cost ${money(rec.cost)})`),
  );
  const summary = lastModelSummary(view.transcript);
  if (summary && Array.isArray(summary.treatments)) {
    const list = el(doc, "ul", "alternatives");
    for (const alt of summary.treatments as Array<{ label: string; cost: number }>) {
      list.appendChild(el(doc, "li", undefined, `${alt.label} (${money(alt.cost)})`));
    }
    card.appendChild(el(doc, "p", undefined, "Alternatives considered:"));
    card.appendChild(list);
  }
  if (view.phase === "awaiting_probe" && handlers.onProbeResult) {
    const tp = rec.testpoint as string;
    const ok = el(doc, "button", "probe-ok", "Probe is ok") as HTMLButtonElement;
    ok.addEventListener("click", () => handlers.onProbeResult!(tp, true));
    const bad = el(doc, "button", "probe-not-ok", "Probe is not ok") as HTMLButtonElement;
    bad.addEventListener("click", () => handlers.onProbeResult!(tp, false));
    card.appendChild(ok);
    card.appendChild(bad);
  }
  if (view.phase === "awaiting_action_result" && handlers.onActionResult) {
    const good = el(doc, "button", "device-ok", "Device works now") as HTMLButtonElement;
    good.addEventListener("click", () => handlers.onActionResult!(true));
    const bad = el(doc, "button", "device-faulty", "Still faulty") as HTMLButtonElement;
    bad.addEventListener("click", () => handlers.onActionResult!(false));
    card.appendChild(good);
    card.appendChild(bad);
  }
  if (view.mode === "simulated" && handlers.onAdvance) {
    const btn = el(doc, "button", "advance", "Advance") as HTMLButtonElement;
    btn.addEventListener("click", () => handlers.onAdvance!());
    card.appendChild(btn);
  }
  return card;
}

function renderLedger(doc: Document, view: SessionView): HTMLElement {
  const card = el(doc, "section", "card ledger");
  card.appendChild(el(doc, "h2", undefined, "Cost ledger"));
  const table = el(doc, "table");
  const rows: Array<[string, number]> = [
    ["probes", view.ledger.probes],
    ["treatments", view.ledger.treatments],
    ["inspections", view.ledger.inspections],
    ["effort", view.ledger.effort],
    ["total", view.ledger.total],
  ];
  for (const [name, value] of rows) {
    const tr = el(doc, "tr", name);
    tr.appendChild(el(doc, "td", undefined, name));
    tr.appendChild(el(doc, "td", "amount", money(value)));
    table.appendChild(tr);
  }
  card.appendChild(table);
  return card;
}

function renderMeta(doc: Document, meta: MetaEstimates | null): HTMLElement {
  const card = el(doc, "section", "card meta");
  card.appendChild(el(doc, "h2", undefined, "Pathway estimates"));
  if (!meta) {
    card.appendChild(el(doc, "p", "idle", "No estimates yet."));
    return card;
  }
  const dl = el(doc, "dl");
  const entries: Array<[string, number | string | null]> = [
    ["X1", meta.X1],
    ["X2", meta.X2],
    ["Y1", meta.Y1],
    ["Y2", meta.Y2],
    ["u", meta.u],
    ["EV(FL)", meta.EV_FL],
    ["EV(BFL)", meta.EV_BFL],
    ["chosen", meta.chosen],
  ];
  for (const [name, value] of entries) {
    dl.appendChild(el(doc, "dt", undefined, name));
    dl.appendChild(
      el(doc, "dd", `meta-${name.replace(/[()]/g, "").toLowerCase()}`,
         value === null ? "-" : String(value)),
    );
  }
  card.appendChild(dl);
  return card;
}

function renderTranscript(doc: Document, transcript: TranscriptEvent[]): HTMLElement {
  const card = el(doc, "section", "card transcript");
  card.appendChild(el(doc, "h2", undefined, "Transcript"));
  const list = el(doc, "ol");
  for (const event of transcript) {
    list.appendChild(el(doc, "li", `event-${event.event}`, JSON.stringify(event)));
  }
  card.appendChild(list);
  return card;
}

export function renderSession(
  container: HTMLElement,
  view: SessionView,
  handlers: Handlers = {},
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  const header = el(doc, "header");
  header.appendChild(el(doc, "h1", undefined, `Session ${view.session_id}`));
  header.appendChild(el(doc, "p", "phase", `${view.mode} / ${view.phase}`));
  container.appendChild(header);

  const tree = el(doc, "section", "card hierarchy");
  tree.appendChild(el(doc, "h2", undefined, "Device hierarchy"));
  const ul = el(doc, "ul", "tree-root");
  ul.appendChild(renderTree(doc, view.context_tree));
  tree.appendChild(ul);
  container.appendChild(tree);

  container.appendChild(renderRecommendation(doc, view, handlers));
  container.appendChild(renderLedger(doc, view));
  container.appendChild(renderMeta(doc, view.meta_estimates));
  container.appendChild(renderTranscript(doc, view.transcript));
}

export function renderError(container: HTMLElement, message: string): void {
  const doc = container.ownerDocument;
  const banner = el(doc, "div", "error-banner", message);
  container.prepend(banner);
}
