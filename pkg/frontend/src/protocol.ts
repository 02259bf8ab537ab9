/**
 * Sequential review wizard.
 *
 * A reaction walks seven dimensions in fixed order; the first failing
 * dimension ends the walk and stamps the annotation with that dimension's
 * issue category and the chosen severity. Passing all seven yields the
 * top-tier confidence with "no problem". The state machine refuses
 * severities a dimension does not offer, so a draft it produces is always
 * server-valid (top tier if and only if no problem).
 */

import { Category, Confidence, LabelPayload } from "./model.js";

export interface Dimension {
  index: number; // 1-based protocol position
  title: string;
  prompt: string;
  category: Category;
  /** severities offered when this dimension fails, harshest first */
  severities: Confidence[];
}

export const DIMENSIONS: Dimension[] = [
  {
    index: 1,
    title: "Reactant-Product Consistency",
    prompt:
      "Do the product atoms clearly come from the reactants (or a common reagent)?",
    category: "reactants_mismatch",
    severities: ["nonsense"],
  },
  {
    index: 2,
    title: "Stability",
    prompt: "Are all substrates and the product isolable species?",
    category: "unstable",
    severities: ["nonsense"],
  },
  {
    index: 3,
    title: "Mechanistic Plausibility",
    prompt: "Is there a plausible mechanism (at most two non-trivial steps)?",
    category: "magic",
    severities: ["nonsense", "rather_not"],
  },
  {
    index: 4,
    title: "Multistep Feasibility / One-Pot",
    prompt:
      "If not a single step: does it decompose into two coherent steps, and is the one-pot setting workable?",
    category: "one_pot",
    severities: ["nonsense", "rather_not", "worthwhile"],
  },
  {
    index: 5,
    title: "Reactivity of Substrates",
    prompt: "Given substrate reactivity, can the reaction be expected to run?",
    category: "reactivity",
    severities: ["nonsense", "rather_not", "worthwhile"],
  },
  {
    index: 6,
    title: "Functional Group Compatibility",
    prompt: "Would another functional group react first?",
    category: "functional_group_incompatibility",
    severities: ["nonsense", "rather_not", "worthwhile"],
  },
  {
    index: 7,
    title: "Selectivity",
    prompt:
      "Is the recorded site/isomer favored over competing outcomes?",
    category: "selectivity",
    severities: ["nonsense", "rather_not", "worthwhile"],
  },
];

export type Answer =
  | { verdict: "pass" }
  | { verdict: "fail"; severity: Confidence };

export interface WizardState {
  routeId: string;
  stepIndex: number;
  dimension: number; // 1..7; meaningful while !done
  done: boolean;
  draft: LabelPayload | null;
}

export function startWizard(routeId: string, stepIndex: number): WizardState {
  return { routeId, stepIndex, dimension: 1, done: false, draft: null };
}

export class ProtocolError extends Error {}

export function answer(
  state: WizardState,
  reply: Answer,
  note = "",
  annotator = "",
): WizardState {
  if (state.done) {
    throw new ProtocolError("wizard already finished");
  }
  const dim = DIMENSIONS[state.dimension - 1];
  if (reply.verdict === "fail") {
    if (!dim.severities.includes(reply.severity)) {
      throw new ProtocolError(
        `dimension ${dim.index} does not offer severity ${reply.severity}`,
      );
    }
    return {
      ...state,
      done: true,
      draft: {
        confidence: reply.severity,
        category: dim.category,
        note,
        annotator,
        protocol_step: dim.index,
      },
    };
  }
  if (state.dimension === DIMENSIONS.length) {
    return {
      ...state,
      done: true,
      draft: {
        confidence: "safe_bet",
        category: "no_problem",
        note,
        annotator,
        protocol_step: DIMENSIONS.length,
      },
    };
  }
  return { ...state, dimension: state.dimension + 1 };
}

export function runWalkthrough(
  routeId: string,
  stepIndex: number,
  answers: Answer[],
  annotator = "",
): LabelPayload {
  let state = startWizard(routeId, stepIndex);
  for (const reply of answers) {
    state = answer(state, reply, "", annotator);
    if (state.done) {
      break;
    }
  }
  if (!state.done || state.draft === null) {
    throw new ProtocolError("walkthrough ended before a verdict");
  }
  return state.draft;
}

/** Client-side mirror of the server's annotation invariant. */
export function validateDraft(draft: LabelPayload): string | null {
  const safe = draft.confidence === "safe_bet";
  const clean = draft.category === "no_problem";
  if (safe !== clean) {
    return "safe_bet and no_problem imply each other";
  }
  if (draft.protocol_step < 1 || draft.protocol_step > 7) {
    return "protocol_step out of range";
  }
  if (!safe) {
    const dim = DIMENSIONS[draft.protocol_step - 1];
    if (dim.category !== draft.category) {
      return `category ${draft.category} does not belong to dimension ${draft.protocol_step}`;
    }
    if (!dim.severities.includes(draft.confidence)) {
      return `severity ${draft.confidence} not offered at dimension ${draft.protocol_step}`;
    }
  }
  return null;
}
