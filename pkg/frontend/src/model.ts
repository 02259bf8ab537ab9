/** Wire types mirroring the review service's /v1 JSON. */

export type Confidence = "nonsense" | "rather_not" | "worthwhile" | "safe_bet";

export type Category =
  | "reactants_mismatch"
  | "unstable"
  | "magic"
  | "one_pot"
  | "reactivity"
  | "functional_group_incompatibility"
  | "selectivity"
  | "no_problem";

export const CONFIDENCE_ORDER: Confidence[] = [
  "nonsense",
  "rather_not",
  "worthwhile",
  "safe_bet",
];

export interface ScoreBundle {
  prior_score: number;
  prior_log: number;
  components: { sequence: number; center: number; selectivity: number };
  classifier_score: number;
  reference_count: number;
  ensemble: number;
  accepted: number;
  thresholds: { classifier: number; prior: number };
}

export interface RouteReactant {
  smiles: string;
  center_spans: [number, number][];
  in_stock: boolean | null;
}

export interface RouteStep {
  product: string;
  product_center_spans: [number, number][];
  reactants: RouteReactant[];
  cost: number;
  scores: ScoreBundle | null;
  annotation: AnnotationRecord | null;
}

export interface Route {
  id: string;
  target: string;
  steps: RouteStep[];
  total_cost: number;
  expansions: number;
  in_stock_leaves: string[];
  verdict: Confidence | null;
}

export interface RouteSummary {
  id: string;
  target: string;
  step_count: number;
  verdict: Confidence | null;
}

export interface LabelPayload {
  confidence: Confidence;
  category: Category;
  note: string;
  annotator: string;
  protocol_step: number;
}

export interface AnnotationRecord extends LabelPayload {
  schema_version: number;
  reaction_id: string;
  route_id: string;
  step_index: number;
  timestamp: string;
}

export interface Progress {
  routes: { id: string; labeled: number; total: number; verdict: Confidence | null }[];
  totals: { steps: number; labeled: number };
  verdict_counts: Record<string, number>;
}

export function minConfidence(values: Confidence[]): Confidence {
  let best = CONFIDENCE_ORDER.length - 1;
  for (const v of values) {
    best = Math.min(best, CONFIDENCE_ORDER.indexOf(v));
  }
  return CONFIDENCE_ORDER[best];
}
