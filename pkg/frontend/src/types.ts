// Shapes as served by the /api endpoints. The console renders these
// verbatim; it never derives label values on its own.

export type LabelValue = "yes" | "unclear" | "no" | "removed";
export type Basis = "post_only" | "post_plus_profile";

export interface Suggestion {
  value: string;
  rule_id: string;
  matched_tags: string[];
}

export interface QueueItem {
  post_id: string;
  cluster_id: number;
  cluster_size: number;
  labeled_count: number;
  histogram: Record<string, number>;
  suggestion: Suggestion | null;
  round: number;
  raw_text: string;
  cleaned_tokens: string[];
  cohort: string;
  source_hashtags: string[];
}

export interface QueueResponse {
  round: number | null;
  items: QueueItem[];
}

export interface LabelRecord {
  post_id: string;
  rater_id: string;
  value: string;
  basis: Basis;
  source: string;
  round: number;
  created_at: string;
}

export interface ClusterRow {
  cluster_id: number;
  size: number;
  labeled_count: number;
  manual_count: number;
  histogram: Record<string, number>;
  decided: boolean;
  value: string | null;
}

export interface ClustersResponse {
  round: number;
  k: number;
  wgss: number;
  sizes: number[];
  clusters: ClusterRow[];
}

export interface IrrStratum {
  stratum: string;
  universe: number;
  excluded: number;
  comparable: number;
  same: number;
  percent_same: number;
  percent_different: number;
  percent_completely_incorrect: number;
  percent_partially_incorrect: number;
}

export interface IrrResponse {
  schema: string;
  strata: IrrStratum[];
  rater_a: string;
  rater_b: string;
  basis: Basis;
}

export interface ProjectionPoint {
  post_id: string;
  x: number;
  y: number;
  cluster_id: number | null;
  label: string | null;
}

export interface ProjectionResponse {
  round: number;
  method: string;
  points: ProjectionPoint[];
}

export interface ReportRow {
  round: number;
  model: string;
  k: number;
  cv_accuracy: number | null;
  cv_applicable: boolean;
  newly_labeled: number;
  labeled_fraction: number;
  queue_length: number;
}

export interface ReportResponse {
  schema: string;
  n_posts: number;
  rounds: ReportRow[];
}

export interface RubricRule {
  rule_id: string;
  condition: string;
  outcome: string;
  executable: boolean;
  requires: string[];
}

export interface RubricResponse {
  rules: RubricRule[];
  lexicon_classes: string[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
