/** DOM glue: wires the reducer and client to the page in index.html. */

import { HttpClient, MatcherClient, WsClient } from "./client.js";
import { cssColor } from "./color.js";
import { GameView, ViewEvent, initialView, reduce } from "./ui.js";

const HTTP_BASE = window.location.origin;
const WS_URL = HTTP_BASE.replace(/^http/, "ws") + "/ws";

let view: GameView = initialView();
const client: MatcherClient =
  "WebSocket" in window ? new WsClient(WS_URL) : new HttpClient(HTTP_BASE);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function dispatch(event: ViewEvent): void {
  view = reduce(view, event);
  render();
}

function render(): void {
  const swatches = el<HTMLDivElement>("swatches");
  swatches.replaceChildren(
    ...view.swatches.map((patch, i) => {
      const cell = document.createElement("div");
      cell.className =
        "swatch" + (view.selectedIndex === i ? " selected" : "");
      cell.style.backgroundColor = cssColor(patch);
      return cell;
    }),
  );

  const chat = el<HTMLDivElement>("chat");
  chat.replaceChildren(
    ...view.transcript.map((bubble) => {
      const div = document.createElement("div");
      div.className = `bubble ${bubble.speaker}`;
      div.textContent = bubble.text;
      return div;
    }),
  );
  chat.scrollTop = chat.scrollHeight;

  el<HTMLInputElement>("utterance").disabled = !view.inputEnabled;
  el<HTMLButtonElement>("send").disabled = !view.inputEnabled;

  const banner = el<HTMLDivElement>("banner");
  if (view.errorBanner) {
    banner.textContent = view.errorBanner;
    banner.className = "banner error";
  } else if (view.outcome !== "open") {
    banner.textContent =
      view.outcome === "success"
        ? "The matcher found your patch!"
        : view.outcome === "failure"
          ? "The matcher picked the wrong patch."
          : "Out of turns.";
    banner.className = `banner ${view.outcome}`;
  } else {
    banner.textContent = "";
    banner.className = "banner";
  }

  el<HTMLDivElement>("rating").hidden = !view.ratingEnabled && !view.ratingSubmitted;
  el<HTMLButtonElement>("rate").disabled = !view.ratingEnabled;
  el<HTMLSpanElement>("rating-ack").hidden = !view.ratingSubmitted;
}

async function start(): Promise<void> {
  try {
    const created = await client.createSession();
    dispatch({ kind: "created", created });
  } catch (err) {
    dispatch({ kind: "error", message: `Cannot reach the service: ${err}` });
  }
}

async function send(): Promise<void> {
  const input = el<HTMLInputElement>("utterance");
  const text = input.value.trim();
  if (!text || !view.session) return;
  input.value = "";
  dispatch({ kind: "sent", text });
  try {
    const reply = await client.sendUtterance(view.session, text);
    dispatch({ kind: "reply", reply });
  } catch (err) {
    dispatch({ kind: "error", message: String(err) });
  }
}

async function submitRating(): Promise<void> {
  if (!view.session) return;
  const rating = Number(el<HTMLSelectElement>("stars").value);
  try {
    await client.rate(view.session, rating);
    dispatch({ kind: "rated" });
  } catch (err) {
    dispatch({ kind: "error", message: String(err) });
  }
}

el<HTMLButtonElement>("send").addEventListener("click", () => void send());
el<HTMLInputElement>("utterance").addEventListener("keydown", (e) => {
  if (e.key === "Enter") void send();
});
el<HTMLButtonElement>("rate").addEventListener("click", () => void submitRating());
el<HTMLButtonElement>("retry").addEventListener("click", () => void start());

void start();
render();
