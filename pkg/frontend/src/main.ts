/** Bootstrap: ask the rater name once per session and mount the app. */

import { ApiClient } from "./api.js";
import { App } from "./app.js";

function rater(): string {
  let name = window.sessionStorage.getItem("rater") ?? "";
  while (!name) {
    name = (window.prompt("Rater name for this session:") ?? "").trim();
  }
  window.sessionStorage.setItem("rater", name);
  return name;
}

const root = document.getElementById("app")!;
const app = new App(root, new ApiClient(""), rater());
void app.start();
