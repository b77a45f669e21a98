import { describe, expect, it } from "vitest";

import type { ClusterView, QueueEntry } from "../src/api.js";
import {
  advance,
  assignmentComplete,
  chooseCanonical,
  currentEntry,
  decision,
  dissolveAll,
  distinctTags,
  dropStale,
  featureIntensity,
  keyAction,
  makeDisagg,
  makeReview,
  rejectWith,
  setSlider,
  setTag,
  splitPayload,
  untaggedMembers,
} from "../src/state.js";

function entry(pairId: string, id1 = 1, id2 = 2): QueueEntry {
  return {
    pair_id: pairId,
    a1: { id: id1, author: `dev${id1} <d${id1}@x>`, name: `dev${id1}`, email: `d${id1}@x` },
    a2: { id: id2, author: `dev${id2} <d${id2}@x>`, name: `dev${id2}`, email: `d${id2}@x` },
    features: { jw_name: 0.9, f_name: -2, sim_files: 0.4 },
    votes: [true, false, true],
    probability: 0.51,
  };
}

describe("review flow state", () => {
  it("builds the POST body for quick decisions", () => {
    const state = makeReview([entry("1-2")], "r1");
    expect(decision(state, 1)).toEqual({ pair_id: "1-2", match: 1, rater: "r1" });
    expect(decision(state, 0)).toEqual({ pair_id: "1-2", match: 0, rater: "r1" });
  });

  it("includes the slider value and canonical choice", () => {
    let state = makeReview([entry("1-2")], "r1");
    state = setSlider(state, 0.7);
    state = chooseCanonical(state, 2);
    expect(decision(state, state.slider)).toEqual({
      pair_id: "1-2",
      match: 0.7,
      canonical_id: 2,
      rater: "r1",
    });
  });

  it("advances and resets in-flight form state on success", () => {
    let state = makeReview([entry("1-2"), entry("3-4", 3, 4)], "r1");
    state = setSlider(state, 0.9);
    state = chooseCanonical(state, 1);
    state = advance(state);
    expect(currentEntry(state)?.pair_id).toBe("3-4");
    expect(state.slider).toBe(0.5);
    expect(state.canonical).toBeNull();
  });

  it("drops a stale entry with a notice (404 path)", () => {
    let state = makeReview([entry("1-2"), entry("3-4", 3, 4)], "r1");
    state = dropStale(state);
    expect(currentEntry(state)?.pair_id).toBe("3-4");
    expect(state.notice).toContain("1-2");
  });

  it("keeps the entry on validation failure (422 path)", () => {
    let state = makeReview([entry("1-2")], "r1");
    state = rejectWith(state, "match must be a number in [0, 1]");
    expect(currentEntry(state)?.pair_id).toBe("1-2");
    expect(state.notice).toContain("match");
  });

  it("clamps the slider to [0, 1]", () => {
    const state = makeReview([entry("1-2")], "r1");
    expect(setSlider(state, 1.4).slider).toBe(1);
    expect(setSlider(state, -0.2).slider).toBe(0);
  });
});

describe("keyboard-only review", () => {
  it("walks a full review session from the keyboard alone", () => {
    let state = makeReview([entry("1-2"), entry("3-4", 3, 4), entry("5-6", 5, 6)], "kb");
    const submitted: Array<{ pair_id: string; match: number; canonical_id?: number }> = [];

    const press = (key: string) => {
      const action = keyAction(state, key);
      if (action.kind === "submit") {
        const body = decision(state, action.match);
        if (body) {
          submitted.push(body);
          state = advance(state);
        }
      } else if (action.kind === "slider") {
        state = setSlider(state, action.value);
      } else if (action.kind === "canonical") {
        state = chooseCanonical(state, action.id);
      }
    };

    press("1"); // match on the first pair
    press("0"); // non-match on the second
    // third: nudge the slider three times, pick canonical B, submit
    press("ArrowRight");
    press("ArrowRight");
    press("ArrowLeft");
    press("b");
    press("Enter");

    expect(submitted).toEqual([
      { pair_id: "1-2", match: 1, rater: "kb" },
      { pair_id: "3-4", match: 0, rater: "kb" },
      { pair_id: "5-6", match: 0.55, canonical_id: 6, rater: "kb" },
    ]);
    expect(currentEntry(state)).toBeNull();
    // keys on an empty queue are inert
    expect(keyAction(state, "1").kind).toBe("none");
  });

  it("ignores unbound keys", () => {
    const state = makeReview([entry("1-2")], "kb");
    expect(keyAction(state, "q").kind).toBe("none");
    expect(keyAction(state, "Escape").kind).toBe("none");
  });
});

describe("feature intensity mapping", () => {
  it("maps documented ranges to presentational [-1, 1]", () => {
    expect(featureIntensity("jw_name", 1)).toBe(1);
    expect(featureIntensity("jw_name", 0)).toBe(-1);
    expect(featureIntensity("jw_name", -1)).toBe(0); // missing sentinel: neutral
    expect(featureIntensity("f_email", -10)).toBe(-1);
    expect(featureIntensity("f_email", 0)).toBe(1);
    expect(featureIntensity("sim_tz", 0.5)).toBe(0);
    expect(featureIntensity("sim_text", -0.4)).toBe(-0.4);
    expect(featureIntensity("sim_files", 2.5)).toBe(1);
  });
});

describe("disaggregation flow state", () => {
  const cluster: ClusterView = {
    cluster_id: 4,
    size: 4,
    suggest_dissolve: false,
    members: [11, 12, 13, 14].map((id) => ({ id, author: `dev${id}` })),
  };

  it("blocks submit until the assignment is total", () => {
    let state = makeDisagg(cluster);
    expect(assignmentComplete(state)).toBe(false);
    expect(splitPayload(state)).toBeNull();
    state = setTag(state, 11, "a");
    state = setTag(state, 12, "a");
    state = setTag(state, 13, "b");
    expect(assignmentComplete(state)).toBe(false);
    expect(untaggedMembers(state)).toEqual([14]);
    state = setTag(state, 14, "b");
    expect(assignmentComplete(state)).toBe(true);
    expect(splitPayload(state)).toEqual({ "11": "a", "12": "a", "13": "b", "14": "b" });
  });

  it("clearing a tag re-blocks submit", () => {
    let state = makeDisagg(cluster);
    for (const m of cluster.members) state = setTag(state, m.id, "x");
    state = setTag(state, 12, "");
    expect(assignmentComplete(state)).toBe(false);
    expect(untaggedMembers(state)).toEqual([12]);
  });

  it("dissolve-all tags every member separately", () => {
    const state = dissolveAll(makeDisagg(cluster));
    expect(assignmentComplete(state)).toBe(true);
    expect(distinctTags(state)).toHaveLength(cluster.members.length);
  });
});
