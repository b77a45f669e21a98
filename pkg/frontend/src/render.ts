/** DOM construction for the two views. Purely presentational: every number
 * shown comes straight from a service field. */

import type { ClusterView, IdentityCard, QueueEntry } from "./api.js";
import { featureIntensity } from "./state.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function dateOf(ts?: number): string {
  if (ts === undefined) return "—";
  return new Date(ts * 1000).toISOString().slice(0, 10);
}

export function identityCard(card: IdentityCard, label: string): HTMLElement {
  const rows: (Node | string)[] = [
    el("div", { class: "card-author" }, [card.author]),
    el("div", { class: "card-row" }, [`name: ${card.name || "—"}`]),
    el("div", { class: "card-row" }, [`email: ${card.email || "—"}`]),
  ];
  if (card.affiliation) {
    rows.push(el("div", { class: "card-row" }, [`affiliation: ${card.affiliation}`]));
  }
  rows.push(
    el("div", { class: "card-row" }, [
      `commits: ${dateOf(card.first_commit)} → ${dateOf(card.last_commit)}`,
    ]),
  );
  return el("div", { class: "identity-card" }, [
    el("div", { class: "card-label" }, [label]),
    ...rows,
  ]);
}

function intensityColor(intensity: number): string {
  // red for -1, neutral at 0, green for +1
  const alpha = Math.min(1, Math.abs(intensity)) * 0.55;
  return intensity >= 0
    ? `rgba(46, 160, 67, ${alpha.toFixed(3)})`
    : `rgba(218, 54, 51, ${alpha.toFixed(3)})`;
}

export function featureTable(features: Record<string, number>): HTMLElement {
  const rows = Object.entries(features).map(([name, value]) => {
    const cell = el("td", {}, [Number.isInteger(value) ? String(value) : value.toFixed(4)]);
    cell.style.backgroundColor = intensityColor(featureIntensity(name, value));
    return el("tr", {}, [el("td", {}, [name]), cell]);
  });
  return el("table", { class: "features" }, [
    el("tbody", {}, rows),
  ]);
}

export function votesLine(entry: QueueEntry): HTMLElement {
  const votes = entry.votes.length
    ? entry.votes.map((v) => (v ? "link" : "no-link")).join(" · ")
    : "no fold votes yet";
  return el("div", { class: "votes" }, [
    `fold votes: ${votes} — blended probability ${entry.probability.toFixed(3)}`,
  ]);
}

export function clusterMemberRow(
  member: { id: number; author?: string; commits?: number },
  tag: string,
  onTag: (tag: string) => void,
): HTMLElement {
  const input = el("input", {
    type: "text",
    value: tag,
    placeholder: "tag",
    class: "tag-input",
    "data-member": String(member.id),
  });
  input.addEventListener("input", () => onTag(input.value.trim()));
  return el("div", { class: "member-row" }, [
    el("span", { class: "member-id" }, [`#${member.id}`]),
    el("span", { class: "member-author" }, [member.author ?? ""]),
    el("span", { class: "member-commits" }, [
      member.commits !== undefined ? `${member.commits} commits` : "",
    ]),
    input,
  ]);
}

export function clusterHeader(cluster: ClusterView): HTMLElement {
  const pieces: (Node | string)[] = [
    el("strong", {}, [`cluster ${cluster.cluster_id}`]),
    ` — ${cluster.size} members`,
  ];
  if (cluster.suggest_dissolve) {
    pieces.push(el("span", { class: "dissolve-hint" }, [" (all names stoplisted: consider dissolving)"]));
  }
  return el("div", { class: "cluster-header" }, pieces);
}
