import { describe, expect, it } from "vitest";

import { esc, pct, unesc } from "../src/html.js";
import { initialQueueState } from "../src/queue.js";
import { freshSession, loadSession, saveSession, toggleBasis } from "../src/session.js";
import {
  clusterColor,
  hashtagClass,
  renderHashtags,
  renderInterstitial,
  renderIrrEmptyState,
  renderIrrView,
  renderQueueItem,
  renderQueueView,
  renderReportView,
  renderRubric,
  renderScatter,
} from "../src/views.js";
import { IRR_FIXTURE, PROJECTION_FIXTURE, queueItem } from "./fixtures.js";

describe("escaping", () => {
  it("round-trips hostile text verbatim", () => {
    const nasty = `<script>alert("x")</script> & 'quotes'`;
    const escaped = esc(nasty);
    expect(escaped).not.toContain("<script>");
    expect(unesc(escaped)).toBe(nasty);
  });

  it("leaves plain text untouched", () => {
    expect(esc("out on the water")).toBe("out on the water");
  });
});

describe("queue item rendering", () => {
  it("shows raw and cleaned text verbatim", () => {
    const item = queueItem({ raw_text: "I <3 sailing & sun" });
    const html = renderQueueItem(item);
    expect(unesc(html)).toContain("I <3 sailing & sun");
    expect(html).toContain(item.cleaned_tokens.join(" "));
  });

  it("classes matched hashtags by the suggesting rule and leaves the rest unknown", () => {
    const item = queueItem();
    expect(hashtagClass("sailinglife", item.suggestion)).toBe("yes");
    expect(hashtagClass("weekendvibes", item.suggestion)).toBe("unknown");
    const html = renderHashtags(item);
    expect(html).toContain("lex-yes");
    expect(html).toContain("#sailinglife");
    expect(html).toContain("#weekendvibes");
  });

  it("maybe-class rule marks its tags lex-maybe", () => {
    const item = queueItem({
      suggestion: { value: "unclear", rule_id: "R2C3", matched_tags: ["mixedtag"] },
      source_hashtags: ["mixedtag"],
    });
    expect(renderHashtags(item)).toContain("lex-maybe");
  });

  it("renders cluster context and the server's suggestion only", () => {
    const html = renderQueueItem(queueItem());
    expect(html).toContain("cluster 2");
    expect(html).toContain("31 posts");
    expect(html).toContain("rule R1");
    const noSuggestion = renderQueueItem(queueItem({ suggestion: null }));
    expect(noSuggestion).toContain("no suggestion");
  });
});

describe("queue view states", () => {
  it("empty queue shows round-complete with a report link", () => {
    const q = { ...initialQueueState(), phase: "empty" as const };
    const html = renderQueueView(q, freshSession());
    expect(html).toContain("round complete");
    expect(html).toContain('data-nav="report"');
  });

  it("failed submission surfaces a retry banner, not a silent drop", () => {
    const item = queueItem();
    const q = {
      ...initialQueueState(),
      phase: "labeling" as const,
      items: [item],
      failed: { item, value: "yes", message: "fetch failed" },
    };
    const html = renderQueueView(q, freshSession());
    expect(html).toContain("submission failed");
    expect(html).toContain('data-action="retry-submit"');
  });

  it("labeling view exposes all four one-key verdicts", () => {
    const q = { ...initialQueueState(), phase: "labeling" as const, items: [queueItem()] };
    const html = renderQueueView(q, freshSession());
    for (const value of ["yes", "unclear", "no", "removed"]) {
      expect(html).toContain(`data-verdict="${value}"`);
    }
  });
});

describe("irr table fidelity", () => {
  it("renders exactly the API's numbers", () => {
    const html = renderIrrView(IRR_FIXTURE);
    const all = IRR_FIXTURE.strata[0];
    // counts verbatim, percentages at the table's one-decimal precision,
    // exact serialized value preserved in the title attribute
    expect(html).toContain(">84<");
    expect(html).toContain(">70<");
    expect(html).toContain(pct(all.percent_same)); // "83.3%"
    expect(html).toContain(`title="${String(all.percent_same)}"`);
    expect(html).toContain(pct(all.percent_completely_incorrect));
    expect(html).toContain(pct(all.percent_partially_incorrect));
    expect(html).toContain("alice");
    expect(html).toContain("bob");
    for (const s of IRR_FIXTURE.strata) {
      expect(html).toContain(`data-stratum="${s.stratum}"`);
    }
  });

  it("one-decimal rendering matches the reported precision", () => {
    expect(pct(83.33333333333334)).toBe("83.3%");
    expect(pct(100.0)).toBe("100.0%");
  });

  it("single-rater state explains itself", () => {
    const html = renderIrrEmptyState("agreement needs two raters with manual labels");
    expect(html).toContain("two raters");
  });
});

describe("scatter", () => {
  it("colors by cluster and overlays distinct label marks", () => {
    const html = renderScatter(PROJECTION_FIXTURE);
    const colors = new Set(
      PROJECTION_FIXTURE.points.map((p) => clusterColor(p.cluster_id)),
    );
    expect(colors.size).toBe(3);
    for (const color of colors) expect(html).toContain(`fill="${color}"`);
    expect(html).toContain('data-label="yes"');
    expect(html).toContain('data-label="no"');
    expect(html).toContain('data-label="unclear"');
    // unlabeled points are plain circles
    const labelMarks = html.match(/label-mark/g) ?? [];
    expect(labelMarks.length).toBe(3);
    // every point is clickable by post id
    for (const p of PROJECTION_FIXTURE.points) {
      expect(html).toContain(`data-post-id="${p.post_id}"`);
    }
  });
});

describe("report and rubric", () => {
  it("report shows N/A for non-applicable CV", () => {
    const html = renderReportView({
      schema: "cycle-report/1",
      n_posts: 60,
      rounds: [
        {
          round: 1, model: "cbow", k: 2, cv_accuracy: null, cv_applicable: false,
          newly_labeled: 0, labeled_fraction: 0.05, queue_length: 10,
        },
        {
          round: 2, model: "cbow", k: 2, cv_accuracy: 1.0, cv_applicable: true,
          newly_labeled: 52, labeled_fraction: 1.0, queue_length: 0,
        },
      ],
    });
    expect(html).toContain("N/A");
    expect(html).toContain("1.0000");
    expect(html).toContain("100.0%");
  });

  it("rubric renders every rule and its outcome", () => {
    const html = renderRubric({
      rules: [
        { rule_id: "R1", condition: "a source hashtag is classified 'yes'", outcome: "yes", executable: true, requires: [] },
        { rule_id: "R4", condition: "judge sarcasm carefully", outcome: "rater judgment", executable: false, requires: [] },
      ],
      lexicon_classes: ["yes", "maybe", "no", "unknown"],
    });
    expect(html).toContain("R1");
    expect(html).toContain("R4");
    expect(html).toContain("rater judgment");
    expect(html).toContain("yes, maybe, no, unknown");
  });

  it("interstitial demands a rater id before starting", () => {
    const html = renderInterstitial();
    expect(html).toContain("rater-id");
    expect(html).toContain("disabled");
    expect(html.toLowerCase()).toContain("distressing content");
  });
});

describe("session state", () => {
  it("toggles between the two bases", () => {
    const s = freshSession();
    expect(toggleBasis(s).basis).toBe("post_plus_profile");
    expect(toggleBasis(toggleBasis(s)).basis).toBe("post_only");
  });

  it("persists and reloads through storage", () => {
    const backing = new Map<string, string>();
    const storage = {
      getItem: (k: string) => backing.get(k) ?? null,
      setItem: (k: string, v: string) => void backing.set(k, v),
    };
    const s = { ...freshSession(), rater_id: "alice", warned: true };
    saveSession(storage, s);
    expect(loadSession(storage)).toEqual(s);
  });

  it("corrupt storage falls back to a fresh session", () => {
    const storage = {
      getItem: () => "{not json",
      setItem: () => undefined,
    };
    expect(loadSession(storage)).toEqual(freshSession());
  });
});
