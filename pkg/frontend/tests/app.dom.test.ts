// @vitest-environment happy-dom
/** Mounted-app tests: the real controller wired to a fake fetch, driven
 * through DOM events. Covers the keyboard review path end to end and the
 * regression where tagging one cluster member clobbered earlier tags. */

import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";

interface Recorded {
  url: string;
  method: string;
  body: unknown;
}

function installFakeFetch(routes: Record<string, (body: unknown) => [number, unknown]>) {
  const calls: Recorded[] = [];
  vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    calls.push({ url, method, body });
    const key = `${method} ${url.split("?")[0]}`;
    const handler = routes[key];
    if (!handler) {
      return new Response(JSON.stringify({ error: `no route ${key}` }), { status: 404 });
    }
    const [status, payload] = handler(body);
    return new Response(JSON.stringify(payload), { status });
  });
  return calls;
}

function queueEntry(pairId: string, id1: number, id2: number) {
  return {
    pair_id: pairId,
    a1: { id: id1, author: `dev${id1} <d${id1}@x>`, name: `dev${id1}`, email: `d${id1}@x` },
    a2: { id: id2, author: `dev${id2} <d${id2}@x>`, name: `dev${id2}`, email: `d${id2}@x` },
    features: { jw_name: 0.8, f_name: -1.2, sim_files: 0.3 },
    votes: [true, false, true],
    probability: 0.52,
  };
}

function mount(): HTMLElement {
  document.body.innerHTML = '<main id="app"></main>';
  return document.getElementById("app")!;
}

function press(key: string): KeyboardEvent {
  const event = new KeyboardEvent("keydown", { key, cancelable: true });
  return event;
}

describe("review flow through the DOM", () => {
  beforeEach(() => vi.unstubAllGlobals());

  it("keyboard 1/0 submits and advances; empty queue refetches", async () => {
    let queue = [queueEntry("1-2", 1, 2), queueEntry("3-4", 3, 4)];
    const calls = installFakeFetch({
      "GET /api/queue": () => [200, queue],
      "POST /api/labels": (body) => {
        queue = queue.filter((e) => e.pair_id !== (body as { pair_id: string }).pair_id);
        return [200, { stored: 1, queue: queue.length }];
      },
    });
    const app = new App(mount(), new ApiClient(""), "dom-rater");
    await app.start();
    expect(document.querySelector(".card-author")?.textContent).toContain("dev1");

    await app.handleKey(press("1"));
    const labelPosts = calls.filter((c) => c.url.includes("/api/labels"));
    expect(labelPosts).toHaveLength(1);
    expect(labelPosts[0].body).toEqual({ pair_id: "1-2", match: 1, rater: "dom-rater" });
    expect(document.querySelector(".card-author")?.textContent).toContain("dev3");

    await app.handleKey(press("0"));
    expect(calls.filter((c) => c.url.includes("/api/labels"))[1].body).toMatchObject({
      pair_id: "3-4",
      match: 0,
    });
    // queue drained: the app refetched and shows the empty state
    expect(document.body.textContent).toContain("Queue is empty");
  });

  it("slider + canonical keyboard path posts the blended judgment", async () => {
    const queue = [queueEntry("5-6", 5, 6)];
    const calls = installFakeFetch({
      "GET /api/queue": () => [200, queue],
      "POST /api/labels": () => [200, { stored: 1, queue: 0 }],
    });
    const app = new App(mount(), new ApiClient(""), "dom-rater");
    await app.start();
    await app.handleKey(press("ArrowRight"));
    await app.handleKey(press("ArrowRight"));
    await app.handleKey(press("b"));
    await app.handleKey(press("Enter"));
    const post = calls.find((c) => c.url.includes("/api/labels"))!;
    expect(post.body).toEqual({
      pair_id: "5-6",
      match: 0.6,
      canonical_id: 6,
      rater: "dom-rater",
    });
  });

  it("stale pair: 404 drops the entry with a notice and refetches", async () => {
    let first = true;
    installFakeFetch({
      "GET /api/queue": () => {
        const entries = first ? [queueEntry("7-8", 7, 8), queueEntry("9-10", 9, 10)] : [queueEntry("9-10", 9, 10)];
        first = false;
        return [200, entries];
      },
      "POST /api/labels": () => [404, { error: "unknown pair 7-8" }],
    });
    const app = new App(mount(), new ApiClient(""), "dom-rater");
    await app.start();
    await app.handleKey(press("1"));
    expect(document.getElementById("notice")?.textContent).toContain("7-8");
    expect(document.querySelector(".card-author")?.textContent).toContain("dev9");
  });
});

describe("disaggregation flow through the DOM", () => {
  beforeEach(() => vi.unstubAllGlobals());

  const cluster = {
    cluster_id: 0,
    size: 4,
    suggest_dissolve: false,
    members: [0, 1, 2, 3].map((id) => ({ id, author: `dev${id}` })),
  };

  async function openCluster(calls: Recorded[]): Promise<App> {
    const app = new App(mount(), new ApiClient(""), "dom-rater");
    await app.start();
    const tabs = document.querySelectorAll("button.tab");
    (tabs[1] as HTMLButtonElement).click(); // the Clusters tab
    await new Promise((resolve) => setTimeout(resolve, 0));
    (document.querySelector("button.open-cluster") as HTMLButtonElement).click();
    return app;
  }

  function typeTag(memberId: number, tag: string): void {
    const input = document.querySelector(
      `input.tag-input[data-member="${memberId}"]`,
    ) as HTMLInputElement;
    input.value = tag;
    input.dispatchEvent(new Event("input", { bubbles: true }));
  }

  it("tags typed on successive members accumulate (regression)", async () => {
    const calls = installFakeFetch({
      "GET /api/queue": () => [200, []],
      "GET /api/clusters": () => [200, [cluster]],
      "POST /api/clusters/0/split": (body) => [200, { clusters: 2 }],
    });
    const app = await openCluster(calls);
    const submit = document.getElementById("submit-split") as HTMLButtonElement;
    expect(submit.hasAttribute("disabled")).toBe(true);

    typeTag(0, "a");
    typeTag(1, "a");
    typeTag(2, "b");
    expect(submit.hasAttribute("disabled")).toBe(true);
    expect(document.getElementById("split-hint")?.textContent).toContain("3");
    typeTag(3, "b");
    expect(submit.hasAttribute("disabled")).toBe(false);

    submit.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    const post = calls.find((c) => c.url.includes("/split"))!;
    // every tag typed along the way survives into the payload
    expect(post.body).toEqual({
      assignments: { "0": "a", "1": "a", "2": "b", "3": "b" },
    });
  });

  it("dissolve-all enables submit with one tag per member", async () => {
    const calls = installFakeFetch({
      "GET /api/queue": () => [200, []],
      "GET /api/clusters": () => [200, [cluster]],
      "POST /api/clusters/0/split": () => [200, { clusters: 5 }],
    });
    await openCluster(calls);
    (document.getElementById("dissolve") as HTMLButtonElement).click();
    const submit = document.getElementById("submit-split") as HTMLButtonElement;
    expect(submit.hasAttribute("disabled")).toBe(false);
    submit.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    const post = calls.find((c) => c.url.includes("/split"))!;
    const tags = Object.values((post.body as { assignments: Record<string, string> }).assignments);
    expect(new Set(tags).size).toBe(4);
  });
});
