import type { Basis } from "./types.js";

// The console's only client-side state. Everything else is refetched
// from the API, so a reload rebuilds every view.

export interface PendingSubmission {
  post_id: string;
  value: string;
  rater_id: string;
  basis: Basis;
  attempts: number;
}

export interface SessionState {
  rater_id: string;
  basis: Basis;
  round: number | null;
  pending: PendingSubmission[];
  warned: boolean; // content-warning interstitial acknowledged
}

export function freshSession(): SessionState {
  return { rater_id: "", basis: "post_only", round: null, pending: [], warned: false };
}

export function toggleBasis(s: SessionState): SessionState {
  const basis: Basis = s.basis === "post_only" ? "post_plus_profile" : "post_only";
  return { ...s, basis };
}

interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const KEY = "labeling-console/session";

export function loadSession(storage: StorageLike): SessionState {
  const raw = storage.getItem(KEY);
  if (raw === null) return freshSession();
  try {
    const parsed = JSON.parse(raw);
    return { ...freshSession(), ...parsed };
  } catch {
    return freshSession();
  }
}

export function saveSession(storage: StorageLike, s: SessionState): void {
  storage.setItem(KEY, JSON.stringify(s));
}
