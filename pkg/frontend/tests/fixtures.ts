import type { IrrResponse, ProjectionResponse, QueueItem } from "../src/types.js";

export function queueItem(overrides: Partial<QueueItem> = {}): QueueItem {
  return {
    post_id: "p001",
    cluster_id: 2,
    cluster_size: 31,
    labeled_count: 1,
    histogram: { yes: 1 },
    suggestion: { value: "yes", rule_id: "R1", matched_tags: ["sailinglife"] },
    round: 3,
    raw_text: "out on the water again <3 #sailinglife",
    cleaned_tokens: ["out", "on", "the", "water", "again"],
    cohort: "topic_flagged",
    source_hashtags: ["sailinglife", "weekendvibes"],
    ...overrides,
  };
}

export const IRR_FIXTURE: IrrResponse = {
  schema: "irr-report/1",
  strata: [
    {
      stratum: "all",
      universe: 84,
      excluded: 0,
      comparable: 84,
      same: 70,
      percent_same: 83.33333333333334,
      percent_different: 16.666666666666664,
      percent_completely_incorrect: 7.142857142857142,
      percent_partially_incorrect: 9.523809523809524,
    },
    {
      stratum: "control",
      universe: 30,
      excluded: 1,
      comparable: 29,
      same: 29,
      percent_same: 100.0,
      percent_different: 0.0,
      percent_completely_incorrect: 0.0,
      percent_partially_incorrect: 0.0,
    },
  ],
  rater_a: "alice",
  rater_b: "bob",
  basis: "post_only",
};

export const PROJECTION_FIXTURE: ProjectionResponse = {
  round: 1,
  method: "pca",
  points: [
    { post_id: "a", x: 0.0, y: 0.0, cluster_id: 0, label: "yes" },
    { post_id: "b", x: 1.0, y: 0.5, cluster_id: 0, label: null },
    { post_id: "c", x: 5.0, y: 4.0, cluster_id: 1, label: "no" },
    { post_id: "d", x: 5.5, y: 4.5, cluster_id: 1, label: null },
    { post_id: "e", x: -3.0, y: 4.0, cluster_id: 2, label: "unclear" },
  ],
};
