/** Pure state machines for the two flows. The server stays the single
 * source of truth: this state is only what's in flight (current entry,
 * slider position, canonical choice, pending tags). Reloading the page
 * reproduces the service's truth.
 */

import type { ClusterView, LabelSubmission, QueueEntry } from "./api.js";

// ---------------------------------------------------------------------------
// Review flow
// ---------------------------------------------------------------------------

export interface ReviewState {
  entries: QueueEntry[];
  rater: string;
  slider: number;
  canonical: number | null;
  notice: string | null;
}

export function makeReview(entries: QueueEntry[], rater: string): ReviewState {
  return { entries, rater, slider: 0.5, canonical: null, notice: null };
}

export function currentEntry(state: ReviewState): QueueEntry | null {
  return state.entries.length ? state.entries[0] : null;
}

/** Build the POST body for a decision on the current entry. */
export function decision(state: ReviewState, match: number): LabelSubmission | null {
  const entry = currentEntry(state);
  if (!entry) return null;
  const body: LabelSubmission = {
    pair_id: entry.pair_id,
    match,
    rater: state.rater,
  };
  if (state.canonical !== null) body.canonical_id = state.canonical;
  return body;
}

/** Successful submission: drop the entry, reset in-flight form state. */
export function advance(state: ReviewState): ReviewState {
  return {
    ...state,
    entries: state.entries.slice(1),
    slider: 0.5,
    canonical: null,
    notice: null,
  };
}

/** 404 from the service: the pair went stale; drop it and tell the user.
 * The controller refetches the queue afterwards. */
export function dropStale(state: ReviewState): ReviewState {
  const entry = currentEntry(state);
  return {
    ...advance(state),
    notice: entry ? `pair ${entry.pair_id} was already resolved elsewhere; skipped` : null,
  };
}

/** Service-side validation failure: keep the entry, surface the detail. */
export function rejectWith(state: ReviewState, detail: string): ReviewState {
  return { ...state, notice: detail };
}

export function setSlider(state: ReviewState, value: number): ReviewState {
  const clamped = Math.min(1, Math.max(0, Math.round(value * 100) / 100));
  return { ...state, slider: clamped };
}

export function chooseCanonical(state: ReviewState, id: number | null): ReviewState {
  return { ...state, canonical: id };
}

export type ReviewAction =
  | { kind: "submit"; match: number }
  | { kind: "slider"; value: number }
  | { kind: "canonical"; id: number | null }
  | { kind: "none" };

/** Keyboard bindings: 1 = match, 0 = non-match, arrows move the slider,
 * Enter submits the slider value, a/b pick the canonical, x clears it. */
export function keyAction(state: ReviewState, key: string): ReviewAction {
  const entry = currentEntry(state);
  if (!entry) return { kind: "none" };
  switch (key) {
    case "1":
      return { kind: "submit", match: 1 };
    case "0":
      return { kind: "submit", match: 0 };
    case "Enter":
      return { kind: "submit", match: state.slider };
    case "ArrowLeft":
      return { kind: "slider", value: state.slider - 0.05 };
    case "ArrowRight":
      return { kind: "slider", value: state.slider + 0.05 };
    case "a":
      return { kind: "canonical", id: entry.a1.id };
    case "b":
      return { kind: "canonical", id: entry.a2.id };
    case "x":
      return { kind: "canonical", id: null };
    default:
      return { kind: "none" };
  }
}

/** Presentational intensity for a feature value, mapped from its
 * documented range onto [-1, 1] (negative renders red, positive green).
 * The UI computes nothing else from feature values.
 */
export function featureIntensity(name: string, value: number): number {
  if (name.startsWith("jw_") || name.startsWith("lev_")) {
    if (value < 0) return 0; // missing sentinel: neutral
    return value * 2 - 1;
  }
  if (name.startsWith("f_")) {
    if (value <= -10) return -1; // invalid / stoplisted
    return Math.max(-1, value / 5 + 1); // 0 (unique) -> 1, -10 -> -1
  }
  if (name === "sim_files") return Math.min(1, value); // 0 -> 0, >=1 -> 1
  if (name === "sim_tz") return value * 2 - 1;
  if (name === "sim_text") return value;
  return 0;
}

// ---------------------------------------------------------------------------
// Disaggregation flow
// ---------------------------------------------------------------------------

export interface DisaggState {
  cluster: ClusterView;
  tags: Record<number, string>;
}

export function makeDisagg(cluster: ClusterView): DisaggState {
  return { cluster, tags: {} };
}

export function setTag(state: DisaggState, memberId: number, tag: string): DisaggState {
  const tags = { ...state.tags };
  if (tag === "") {
    delete tags[memberId];
  } else {
    tags[memberId] = tag;
  }
  return { ...state, tags };
}

/** Submit unlocks only once every member carries a tag. */
export function assignmentComplete(state: DisaggState): boolean {
  return state.cluster.members.every((m) => state.tags[m.id] !== undefined);
}

export function untaggedMembers(state: DisaggState): number[] {
  return state.cluster.members.filter((m) => state.tags[m.id] === undefined).map((m) => m.id);
}

export function splitPayload(state: DisaggState): Record<string, string> | null {
  if (!assignmentComplete(state)) return null;
  const out: Record<string, string> = {};
  for (const member of state.cluster.members) {
    out[String(member.id)] = state.tags[member.id];
  }
  return out;
}

/** Every member its own tag: the treatment for all-fictitious clusters. */
export function dissolveAll(state: DisaggState): DisaggState {
  const tags: Record<number, string> = {};
  for (const member of state.cluster.members) {
    tags[member.id] = String(member.id);
  }
  return { ...state, tags };
}

export function distinctTags(state: DisaggState): string[] {
  return [...new Set(Object.values(state.tags))].sort();
}
