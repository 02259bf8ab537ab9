/** Application shell: route list -> step cards -> sequential wizard. */

import { ReviewApi, ApiError } from "./api.js";
import { Confidence, Route } from "./model.js";
import {
  answer,
  startWizard,
  validateDraft,
  WizardState,
} from "./protocol.js";
import {
  el,
  renderDashboard,
  renderRoute,
  renderRouteList,
  renderWizard,
} from "./render.js";
import { bindKeys } from "./keyboard.js";

interface AppState {
  view: "list" | "route";
  route: Route | null;
  selectedStep: number;
  wizard: WizardState | null;
  status: string;
}

const api = new ReviewApi(
  (window as unknown as { REVIEW_API_URL?: string }).REVIEW_API_URL ?? "",
);

const state: AppState = {
  view: "list",
  route: null,
  selectedStep: 0,
  wizard: null,
  status: "",
};

const root = document.getElementById("app")!;

async function showList(): Promise<void> {
  state.view = "list";
  state.route = null;
  state.wizard = null;
  const [summaries, progress] = await Promise.all([
    api.listRoutes(),
    api.getProgress(),
  ]);
  root.replaceChildren(
    el("h1", {}, ["Route review"]),
    renderRouteList(summaries, (id) => {
      void openRoute(id);
    }),
    renderDashboard(progress),
    statusLine(),
  );
}

async function openRoute(id: string, keepStep = false): Promise<void> {
  const route = await api.getRoute(id);
  state.view = "route";
  state.route = route;
  if (!keepStep) {
    state.selectedStep = firstUnlabeledStep(route);
  }
  state.wizard = null;
  redraw();
}

function firstUnlabeledStep(route: Route): number {
  const index = route.steps.findIndex((s) => !s.annotation);
  return index < 0 ? 0 : index;
}

function statusLine(): HTMLElement {
  return el("div", { class: "status", role: "status" }, [state.status]);
}

function redraw(): void {
  if (state.view === "list" || !state.route) {
    void showList();
    return;
  }
  const pieces: HTMLElement[] = [
    renderRoute(state.route, state.selectedStep, (step) => {
      state.selectedStep = step;
      state.wizard = null;
      redraw();
    }),
  ];
  if (state.wizard) {
    pieces.push(
      renderWizard(
        state.wizard,
        () => handleAnswer({ verdict: "pass" }),
        (severity) => handleAnswer({ verdict: "fail", severity }),
      ),
    );
  } else {
    pieces.push(
      el("p", { class: "muted" }, [
        "enter: review selected step · j/k: move · g: route list",
      ]),
    );
  }
  pieces.push(statusLine());
  root.replaceChildren(...pieces);
}

function handleAnswer(reply:
  | { verdict: "pass" }
  | { verdict: "fail"; severity: Confidence }): void {
  if (!state.wizard || !state.route) {
    return;
  }
  try {
    state.wizard = answer(state.wizard, reply);
  } catch (err) {
    state.status = String(err);
    redraw();
    return;
  }
  if (state.wizard.done && state.wizard.draft) {
    void submitDraft();
    return;
  }
  redraw();
}

async function submitDraft(): Promise<void> {
  if (!state.wizard?.draft || !state.route) {
    return;
  }
  const draft = state.wizard.draft;
  const problem = validateDraft(draft);
  if (problem) {
    state.status = `not submitted: ${problem}`;
    redraw();
    return;
  }
  try {
    await api.postLabel(state.route.id, state.wizard.stepIndex, draft);
    state.status = `saved ${draft.confidence}/${draft.category} for step ` +
      `${state.wizard.stepIndex + 1}`;
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      state.status = "conflict: route changed, reloading";
    } else {
      state.status = `save failed: ${String(err)}`;
    }
  }
  await openRoute(state.route.id, true);
  state.status && redraw();
}

bindKeys(document, {
  nextStep() {
    if (state.route) {
      state.selectedStep = Math.min(
        state.selectedStep + 1,
        state.route.steps.length - 1,
      );
      state.wizard = null;
      redraw();
    }
  },
  previousStep() {
    if (state.route) {
      state.selectedStep = Math.max(state.selectedStep - 1, 0);
      state.wizard = null;
      redraw();
    }
  },
  openWizard() {
    if (state.route && !state.wizard) {
      state.wizard = startWizard(state.route.id, state.selectedStep);
      redraw();
    }
  },
  closeWizard() {
    if (state.wizard) {
      state.wizard = null;
      redraw();
    }
  },
  pass() {
    if (state.wizard) {
      handleAnswer({ verdict: "pass" });
    }
  },
  fail(severity) {
    if (state.wizard) {
      handleAnswer({ verdict: "fail", severity });
    }
  },
  goToList() {
    void showList();
  },
});

void showList();
