import { ApiClient, ApiError } from "./api.js";
import type { SessionState } from "./session.js";
import type { Basis, QueueItem } from "./types.js";

// Queue flow: fetch a batch, show one item at a time, submit-and-advance.
// A submission that fails on the network stays at the front of the pending
// list and the UI shows a retry banner; nothing is dropped silently.

export const KEY_TO_VALUE: Record<string, string> = {
  y: "yes",
  u: "unclear",
  n: "no",
  r: "removed",
};

export type QueuePhase = "loading" | "labeling" | "empty" | "error";

export interface QueueState {
  phase: QueuePhase;
  items: QueueItem[];
  cursor: number;
  round: number | null;
  failed: { item: QueueItem; value: string; message: string } | null;
  submitted: number;
}

export function initialQueueState(): QueueState {
  return { phase: "loading", items: [], cursor: 0, round: null, failed: null, submitted: 0 };
}

export function currentItem(q: QueueState): QueueItem | null {
  return q.cursor < q.items.length ? q.items[q.cursor] : null;
}

export class QueueController {
  state: QueueState = initialQueueState();

  constructor(
    private api: ApiClient,
    private session: () => SessionState,
    private batchSize = 25,
  ) {}

  async refresh(): Promise<QueueState> {
    this.state = { ...this.state, phase: "loading" };
    try {
      const resp = await this.api.queue(this.batchSize, this.session().basis);
      this.state = {
        ...this.state,
        phase: resp.items.length > 0 ? "labeling" : "empty",
        items: resp.items,
        cursor: 0,
        round: resp.round,
        failed: null,
      };
    } catch (err) {
      this.state = {
        ...this.state,
        phase: "error",
        failed: null,
      };
      if (!(err instanceof ApiError)) throw err;
    }
    return this.state;
  }

  /** Submit a verdict for the current item and advance. The server is the
   * source of truth: the item leaves the local queue only after a 2xx. */
  async submit(value: string): Promise<QueueState> {
    const item = currentItem(this.state);
    if (item === null) return this.state;
    const s = this.session();
    try {
      await this.api.submitLabel({
        post_id: item.post_id,
        value,
        rater_id: s.rater_id,
        basis: s.basis,
      });
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      this.state = { ...this.state, failed: { item, value, message } };
      return this.state;
    }
    const cursor = this.state.cursor + 1;
    this.state = {
      ...this.state,
      cursor,
      failed: null,
      submitted: this.state.submitted + 1,
      phase: cursor < this.state.items.length ? "labeling" : "empty",
    };
    if (this.state.phase === "empty") {
      // batch exhausted; the server may still have more queued
      return this.refresh();
    }
    return this.state;
  }

  async retry(): Promise<QueueState> {
    const failed = this.state.failed;
    if (failed === null) return this.state;
    return this.submit(failed.value);
  }

  /** Map a keypress to a submission; unknown keys are ignored. */
  async handleKey(key: string): Promise<QueueState> {
    const value = KEY_TO_VALUE[key.toLowerCase()];
    if (value === undefined) return this.state;
    return this.submit(value);
  }

  basisChanged(_basis: Basis): Promise<QueueState> {
    // labels already submitted keep their basis; the queue refetches so
    // posts labeled under the other basis reappear for this one
    return this.refresh();
  }
}
