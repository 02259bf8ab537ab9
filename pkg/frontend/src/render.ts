/** DOM rendering. All state shown here comes from the service; the UI
 * holds only navigation state. */

import {
  Confidence,
  Progress,
  Route,
  RouteStep,
  RouteSummary,
} from "./model.js";
import { DIMENSIONS, WizardState } from "./protocol.js";

const CONFIDENCE_LABELS: Record<Confidence, string> = {
  nonsense: "Nonsense",
  rather_not: "Rather not",
  worthwhile: "Worthwhile",
  safe_bet: "Safe bet",
};

export function el(
  tag: string,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

/** SMILES with reaction-center characters wrapped in <mark>. */
export function highlightSmiles(
  smiles: string,
  spans: [number, number][],
): HTMLElement {
  const host = el("code", { class: "smiles" });
  let cursor = 0;
  const ordered = [...spans].sort((a, b) => a[0] - b[0]);
  for (const [start, end] of ordered) {
    if (start > cursor) {
      host.append(smiles.slice(cursor, start));
    }
    host.append(el("mark", {}, [smiles.slice(start, end)]));
    cursor = Math.max(cursor, end);
  }
  host.append(smiles.slice(cursor));
  return host;
}

function confidenceChip(value: Confidence | null): HTMLElement {
  if (value === null) {
    return el("span", { class: "chip chip-unlabeled" }, ["unlabeled"]);
  }
  return el("span", { class: `chip chip-${value}` }, [
    CONFIDENCE_LABELS[value],
  ]);
}

export function renderRouteList(
  summaries: RouteSummary[],
  onOpen: (id: string) => void,
): HTMLElement {
  const list = el("ul", { class: "route-list" });
  for (const summary of summaries) {
    const link = el("a", { href: "#", tabindex: "0" }, [summary.id]);
    link.addEventListener("click", (event) => {
      event.preventDefault();
      onOpen(summary.id);
    });
    list.append(
      el("li", {}, [
        link,
        el("code", { class: "smiles" }, [summary.target]),
        el("span", { class: "muted" }, [`${summary.step_count} steps`]),
        confidenceChip(summary.verdict),
      ]),
    );
  }
  if (!summaries.length) {
    list.append(el("li", { class: "muted" }, ["no routes loaded"]));
  }
  return list;
}

function scoreLine(step: RouteStep): HTMLElement {
  const line = el("div", { class: "scores muted" });
  if (!step.scores) {
    line.append("no scores");
    return line;
  }
  const s = step.scores;
  line.append(
    `prior ${s.prior_score.toFixed(3)} · classifier ` +
      `${s.classifier_score.toFixed(3)} · refs ${s.reference_count} · ` +
      `ensemble ${s.ensemble.toFixed(3)} · ` +
      (s.accepted ? "accepted" : "rejected"),
  );
  return line;
}

export function renderRoute(
  route: Route,
  selected: number,
  onSelect: (step: number) => void,
): HTMLElement {
  const host = el("section", { class: "route" });
  const banner = el("div", { class: "verdict-banner" });
  if (route.verdict !== null) {
    banner.append("Route verdict: ", confidenceChip(route.verdict));
  } else {
    banner.append(
      el("span", { class: "muted" }, [
        "verdict appears once every step is labeled",
      ]),
    );
  }
  host.append(
    el("h2", {}, [`${route.id}`]),
    el("div", {}, [
      "target ",
      el("code", { class: "smiles" }, [route.target]),
    ]),
    banner,
  );
  route.steps.forEach((step, index) => {
    const card = el("article", {
      class: `step-card${index === selected ? " selected" : ""}`,
      "data-step": String(index),
      tabindex: "0",
    });
    card.addEventListener("click", () => onSelect(index));
    const reactants = el("div", { class: "reactants" });
    step.reactants.forEach((reactant, ri) => {
      if (ri > 0) {
        reactants.append(" + ");
      }
      reactants.append(highlightSmiles(reactant.smiles, reactant.center_spans));
      if (reactant.in_stock) {
        reactants.append(el("span", { class: "chip chip-stock" }, ["stock"]));
      }
    });
    card.append(
      el("header", {}, [
        `step ${index + 1}`,
        step.annotation
          ? confidenceChip(step.annotation.confidence)
          : confidenceChip(null),
      ]),
      reactants,
      el("div", { class: "arrow" }, ["→"]),
      highlightSmiles(step.product, step.product_center_spans),
      scoreLine(step),
    );
    host.append(card);
  });
  return host;
}

export function renderWizard(
  state: WizardState,
  onPass: () => void,
  onFail: (severity: Confidence) => void,
): HTMLElement {
  const host = el("section", { class: "wizard" });
  if (state.done && state.draft) {
    host.append(
      el("h3", {}, ["Review finished"]),
      el("p", {}, [
        `${CONFIDENCE_LABELS[state.draft.confidence]} / ` +
          state.draft.category,
      ]),
    );
    return host;
  }
  const dim = DIMENSIONS[state.dimension - 1];
  host.append(
    el("h3", {}, [`${dim.index}/7 ${dim.title}`]),
    el("p", {}, [dim.prompt]),
  );
  const controls = el("div", { class: "wizard-controls" });
  const passBtn = el(
    "button",
    { "data-key": "p", accesskey: "p" },
    ["Pass (p)"],
  );
  passBtn.addEventListener("click", onPass);
  controls.append(passBtn);
  const keys: Record<string, string> = {
    nonsense: "n",
    rather_not: "r",
    worthwhile: "w",
  };
  for (const severity of dim.severities) {
    const key = keys[severity];
    const btn = el("button", { "data-key": key }, [
      `Fail: ${CONFIDENCE_LABELS[severity]} (${key})`,
    ]);
    btn.addEventListener("click", () => onFail(severity));
    controls.append(btn);
  }
  host.append(controls);
  return host;
}

export function renderDashboard(progress: Progress): HTMLElement {
  const host = el("section", { class: "dashboard" });
  host.append(el("h3", {}, ["Progress"]));
  const total = progress.totals.steps || 1;
  host.append(
    el("div", {}, [
      `${progress.totals.labeled}/${progress.totals.steps} steps labeled`,
    ]),
  );
  const bars = el("div", { class: "verdict-bars" });
  const order = ["safe_bet", "worthwhile", "rather_not", "nonsense",
                 "unlabeled"];
  for (const key of order) {
    const count = progress.verdict_counts[key] ?? 0;
    if (!count) {
      continue;
    }
    const bar = el("div", { class: `bar bar-${key}` }, [`${key}: ${count}`]);
    bar.style.width = `${Math.max(8, (count / total) * 100)}%`;
    bars.append(bar);
  }
  host.append(bars);
  const table = el("ul", { class: "route-progress" });
  for (const route of progress.routes) {
    table.append(
      el("li", {}, [
        `${route.id}: ${route.labeled}/${route.total} `,
        confidenceChip(route.verdict),
      ]),
    );
  }
  host.append(table);
  return host;
}
