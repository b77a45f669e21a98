/** The application controller: wires the API client and the pure state
 * machines to the DOM. Optimistic submits with the server as the single
 * source of truth; any conflict (stale pair, changed partition) falls back
 * to a refetch. Exported separately from the bootstrap so tests can mount
 * it against a fake fetch.
 */

import { ApiClient, type ClusterView } from "./api.js";
import {
  advance,
  assignmentComplete,
  chooseCanonical,
  currentEntry,
  decision,
  dissolveAll,
  dropStale,
  keyAction,
  makeDisagg,
  makeReview,
  rejectWith,
  setSlider,
  setTag,
  splitPayload,
  untaggedMembers,
  type DisaggState,
  type ReviewState,
} from "./state.js";
import {
  clusterHeader,
  clusterMemberRow,
  el,
  featureTable,
  identityCard,
  votesLine,
} from "./render.js";

export class App {
  review: ReviewState;
  disagg: DisaggState | null = null;
  clusters: ClusterView[] = [];
  view: "review" | "clusters" = "review";
  private busy = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    rater: string,
  ) {
    this.review = makeReview([], rater);
  }

  async start(): Promise<void> {
    document.addEventListener("keydown", (event) => {
      void this.handleKey(event);
    });
    await this.refetchQueue();
  }

  async refetchQueue(): Promise<void> {
    const result = await this.api.fetchQueue(25);
    if (result.status === 200) {
      this.review = { ...makeReview(result.data, this.review.rater), notice: this.review.notice };
    } else {
      this.review = rejectWith(this.review, `queue fetch failed (${result.status})`);
    }
    this.paint();
  }

  async submit(match: number): Promise<void> {
    if (this.busy) return;
    const body = decision(this.review, match);
    if (!body) return;
    this.busy = true;
    try {
      const result = await this.api.submitLabel(body);
      if (result.status === 200) {
        this.review = advance(this.review);
        if (!this.review.entries.length) await this.refetchQueue();
      } else if (result.status === 404) {
        this.review = dropStale(this.review);
        await this.refetchQueue();
      } else {
        const detail = (result.data as { error?: string })?.error ?? `error ${result.status}`;
        this.review = rejectWith(this.review, detail);
      }
    } finally {
      this.busy = false;
    }
    this.paint();
  }

  async handleKey(event: KeyboardEvent): Promise<void> {
    if (this.view !== "review") return;
    const target = event.target as { tagName?: string; type?: string } | null;
    if (target?.tagName === "INPUT" && target.type === "text") return;
    const action = keyAction(this.review, event.key);
    if (action.kind === "none") return;
    event.preventDefault();
    if (action.kind === "submit") {
      await this.submit(action.match);
    } else if (action.kind === "slider") {
      this.review = setSlider(this.review, action.value);
      this.paint();
    } else if (action.kind === "canonical") {
      this.review = chooseCanonical(this.review, action.id);
      this.paint();
    }
  }

  async loadClusters(): Promise<void> {
    const result = await this.api.clusters(2);
    this.clusters = result.status === 200 ? result.data : [];
    this.disagg = null;
    this.paint();
  }

  async retrain(): Promise<void> {
    const result = await this.api.retrain();
    this.notice(result.status === 200 ? "retrained" : `retrain: ${result.status}`);
    await this.refetchQueue();
  }

  async submitSplit(): Promise<void> {
    if (!this.disagg) return;
    const payload = splitPayload(this.disagg);
    if (!payload) return;
    const result = await this.api.splitCluster(this.disagg.cluster.cluster_id, payload);
    if (result.status === 200 || result.status === 404 || result.status === 409) {
      // success, or the partition changed under us: reload either way
      await this.loadClusters();
    } else {
      this.notice(`split rejected: ${(result.data as { error?: string })?.error ?? result.status}`);
    }
  }

  private notice(text: string): void {
    const bar = this.root.querySelector("#notice");
    if (bar) bar.textContent = text;
  }

  private reviewView(): HTMLElement {
    const entry = currentEntry(this.review);
    const container = el("div", { class: "review" });
    container.append(el("div", { class: "notice", id: "notice" }, [this.review.notice ?? ""]));
    if (!entry) {
      container.append(
        el("p", {}, ["Queue is empty. Retrain to look for a fresh confusion region."]),
      );
      const retrain = el("button", { id: "retrain" }, ["Retrain"]);
      retrain.addEventListener("click", () => void this.retrain());
      container.append(retrain);
      return container;
    }
    container.append(
      el("div", { class: "pair" }, [
        identityCard(entry.a1, "A (key: a for canonical)"),
        identityCard(entry.a2, "B (key: b for canonical)"),
      ]),
    );
    container.append(votesLine(entry));
    container.append(featureTable(entry.features));

    const matchBtn = el("button", { class: "match", title: "key: 1" }, ["Match (1)"]);
    matchBtn.addEventListener("click", () => void this.submit(1));
    const nonBtn = el("button", { class: "non-match", title: "key: 0" }, ["Non-match (0)"]);
    nonBtn.addEventListener("click", () => void this.submit(0));
    const slider = el("input", {
      type: "range",
      min: "0",
      max: "1",
      step: "0.01",
      value: String(this.review.slider),
      id: "probability-slider",
    });
    const sliderLabel = el("span", { class: "slider-value" }, [this.review.slider.toFixed(2)]);
    slider.addEventListener("input", () => {
      this.review = setSlider(this.review, Number(slider.value));
      sliderLabel.textContent = this.review.slider.toFixed(2);
    });
    const sliderBtn = el("button", { id: "submit-slider", title: "key: Enter" }, [
      "Submit probability",
    ]);
    sliderBtn.addEventListener("click", () => void this.submit(this.review.slider));

    const canonical = el("select", { id: "canonical" });
    canonical.append(el("option", { value: "" }, ["canonical: none"]));
    for (const side of [entry.a1, entry.a2]) {
      const opt = el("option", { value: String(side.id) }, [`canonical: ${side.author}`]);
      if (this.review.canonical === side.id) opt.setAttribute("selected", "selected");
      canonical.append(opt);
    }
    canonical.addEventListener("change", () => {
      this.review = chooseCanonical(
        this.review,
        canonical.value === "" ? null : Number(canonical.value),
      );
    });

    container.append(
      el("div", { class: "controls" }, [
        matchBtn,
        nonBtn,
        el("div", { class: "slider-box" }, [slider, sliderLabel, sliderBtn]),
        canonical,
      ]),
    );
    container.append(
      el("p", { class: "hint" }, [
        "keys: 1 match · 0 non-match · ←/→ slider · Enter submit slider · a/b canonical · x clear",
      ]),
    );
    return container;
  }

  private clustersView(): HTMLElement {
    const container = el("div", { class: "clusters" });
    if (!this.disagg) {
      if (!this.clusters.length) {
        container.append(el("p", {}, ["No clusters at or above the size threshold."]));
      }
      for (const cluster of this.clusters) {
        const row = el("div", { class: "cluster-pick" }, [clusterHeader(cluster)]);
        const open = el("button", { class: "open-cluster" }, ["Disaggregate"]);
        open.addEventListener("click", () => {
          this.disagg = makeDisagg(cluster);
          this.paint();
        });
        row.append(open);
        container.append(row);
      }
      return container;
    }
    container.append(clusterHeader(this.disagg.cluster));
    const submitBtn = el("button", { id: "submit-split" }, ["Submit split"]);
    const hint = el("span", { id: "split-hint", class: "hint" });
    const paintSubmitState = () => {
      if (!this.disagg) return;
      if (assignmentComplete(this.disagg)) {
        submitBtn.removeAttribute("disabled");
        hint.textContent = "";
      } else {
        submitBtn.setAttribute("disabled", "disabled");
        hint.textContent = `untagged members: ${untaggedMembers(this.disagg).join(", ")}`;
      }
    };
    for (const member of this.disagg.cluster.members) {
      container.append(
        // always update from the live state: successive keystrokes on
        // different members must accumulate tags
        clusterMemberRow(member, this.disagg.tags[member.id] ?? "", (tag) => {
          if (this.disagg) {
            this.disagg = setTag(this.disagg, member.id, tag);
            paintSubmitState();
          }
        }),
      );
    }
    const dissolve = el("button", { id: "dissolve" }, ["Dissolve all (one tag each)"]);
    dissolve.addEventListener("click", () => {
      if (this.disagg) {
        this.disagg = dissolveAll(this.disagg);
        this.paint();
      }
    });
    submitBtn.addEventListener("click", () => void this.submitSplit());
    container.append(el("div", { class: "controls" }, [dissolve, submitBtn, hint]));
    paintSubmitState();
    return container;
  }

  paint(): void {
    this.root.replaceChildren();
    const tabs = el("div", { class: "tabs" });
    for (const [name, label] of [
      ["review", "Review queue"],
      ["clusters", "Clusters"],
    ] as const) {
      const tab = el("button", { class: this.view === name ? "tab active" : "tab" }, [label]);
      tab.addEventListener("click", () => {
        this.view = name;
        if (name === "clusters") void this.loadClusters();
        else void this.refetchQueue();
      });
      tabs.append(tab);
    }
    this.root.append(tabs);
    this.root.append(this.view === "review" ? this.reviewView() : this.clustersView());
  }
}
