import { describe, expect, it } from "vitest";

import type { ApiClient, LabelSubmission } from "../src/api.js";
import { KEY_TO_VALUE, QueueController, currentItem } from "../src/queue.js";
import { freshSession } from "../src/session.js";
import type { QueueItem } from "../src/types.js";
import { queueItem } from "./fixtures.js";

function fakeApi(items: QueueItem[]) {
  const submissions: LabelSubmission[] = [];
  let failNext = false;
  const api = {
    submissions,
    setFailNext() {
      failNext = true;
    },
    async queue() {
      // server-side view: anything submitted has left the queue
      const labeled = new Set(submissions.map((s) => s.post_id));
      return { round: 1, items: items.filter((it) => !labeled.has(it.post_id)) };
    },
    async submitLabel(sub: LabelSubmission) {
      if (failNext) {
        failNext = false;
        throw new TypeError("fetch failed");
      }
      submissions.push(sub);
      return { ...sub, source: "manual", round: 1, created_at: "" };
    },
  };
  return api;
}

function session(raterId = "alice") {
  return { ...freshSession(), rater_id: raterId, warned: true };
}

describe("queue controller", () => {
  it("submit advances and carries rater, basis", async () => {
    const items = [queueItem({ post_id: "a" }), queueItem({ post_id: "b" })];
    const api = fakeApi(items);
    const ctl = new QueueController(api as unknown as ApiClient, session);
    await ctl.refresh();
    expect(currentItem(ctl.state)?.post_id).toBe("a");

    await ctl.submit("yes");
    expect(api.submissions).toEqual([
      { post_id: "a", value: "yes", rater_id: "alice", basis: "post_only" },
    ]);
    expect(currentItem(ctl.state)?.post_id).toBe("b");
  });

  it("keyboard y/u/n/r map to the four verdicts and other keys are inert", async () => {
    expect(KEY_TO_VALUE).toEqual({ y: "yes", u: "unclear", n: "no", r: "removed" });
    const api = fakeApi([
      queueItem({ post_id: "a" }),
      queueItem({ post_id: "b" }),
      queueItem({ post_id: "c" }),
      queueItem({ post_id: "d" }),
      queueItem({ post_id: "e" }),
    ]);
    const ctl = new QueueController(api as unknown as ApiClient, session);
    await ctl.refresh();
    await ctl.handleKey("x"); // ignored
    expect(api.submissions.length).toBe(0);
    for (const key of ["y", "u", "N", "r"]) await ctl.handleKey(key);
    expect(api.submissions.map((s) => s.value)).toEqual(["yes", "unclear", "no", "removed"]);
  });

  it("failed submission never drops the item; retry resubmits it", async () => {
    const api = fakeApi([queueItem({ post_id: "a" })]);
    const ctl = new QueueController(api as unknown as ApiClient, session);
    await ctl.refresh();
    api.setFailNext();
    await ctl.submit("yes");
    expect(ctl.state.failed?.item.post_id).toBe("a");
    expect(currentItem(ctl.state)?.post_id).toBe("a"); // still there
    await ctl.retry();
    expect(ctl.state.failed).toBeNull();
    expect(api.submissions.map((s) => s.post_id)).toEqual(["a"]);
  });

  it("exhausting the batch refetches; an empty server queue ends the round", async () => {
    const api = fakeApi([queueItem({ post_id: "a" })]);
    const ctl = new QueueController(api as unknown as ApiClient, session);
    await ctl.refresh();
    const state = await ctl.submit("no");
    expect(state.phase).toBe("empty"); // server had nothing further
  });

  it("basis toggle refetches under the new basis", async () => {
    const api = fakeApi([queueItem({ post_id: "a" })]);
    const ctl = new QueueController(api as unknown as ApiClient, session);
    await ctl.refresh();
    const state = await ctl.basisChanged("post_plus_profile");
    expect(state.phase).toBe("labeling");
    expect(state.cursor).toBe(0);
  });
});
