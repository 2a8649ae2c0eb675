/**
 * View-state reducer for the game screen.
 *
 * The reducer is pure: `main.ts` feeds it protocol events and re-renders
 * from the resulting state, so replaying a transcript reproduces the
 * same view.
 */

import type { Patch, Reply, SessionCreated } from "./protocol.js";

export interface ChatBubble {
  speaker: "you" | "matcher";
  text: string;
}

export interface GameView {
  session: string | null;
  swatches: Patch[];
  transcript: ChatBubble[];
  inputEnabled: boolean;
  selectedIndex: number | null;
  outcome: "open" | "success" | "failure" | "timeout";
  ratingEnabled: boolean;
  ratingSubmitted: boolean;
  errorBanner: string | null;
}

export type ViewEvent =
  | { kind: "created"; created: SessionCreated }
  | { kind: "sent"; text: string }
  | { kind: "reply"; reply: Reply }
  | { kind: "rated" }
  | { kind: "error"; message: string };

export function initialView(): GameView {
  return {
    session: null,
    swatches: [],
    transcript: [],
    inputEnabled: false,
    selectedIndex: null,
    outcome: "open",
    ratingEnabled: false,
    ratingSubmitted: false,
    errorBanner: null,
  };
}

export function reduce(view: GameView, event: ViewEvent): GameView {
  switch (event.kind) {
    case "created":
      return {
        ...initialView(),
        session: event.created.session,
        swatches: event.created.patches,
        inputEnabled: true,
      };
    case "sent":
      return {
        ...view,
        transcript: [...view.transcript, { speaker: "you", text: event.text }],
      };
    case "reply":
      return applyReply(view, event.reply);
    case "rated":
      return { ...view, ratingEnabled: false, ratingSubmitted: true };
    case "error":
      return { ...view, errorBanner: event.message };
  }
}

function applyReply(view: GameView, reply: Reply): GameView {
  switch (reply.kind) {
    case "clarify":
    case "none":
      return {
        ...view,
        transcript: [
          ...view.transcript,
          { speaker: "matcher", text: reply.text ?? "" },
        ],
      };
    case "select": {
      const index = reply.index ?? null;
      const outcome =
        reply.correct === null || reply.correct === undefined
          ? "success" // unknown target: still a completed game
          : reply.correct
            ? "success"
            : "failure";
      return {
        ...view,
        transcript: [
          ...view.transcript,
          { speaker: "matcher", text: `I pick patch ${index}` },
        ],
        inputEnabled: false,
        selectedIndex: index,
        outcome,
        ratingEnabled: true,
      };
    }
    case "timeout":
      return {
        ...view,
        transcript: [
          ...view.transcript,
          { speaker: "matcher", text: "We ran out of turns." },
        ],
        inputEnabled: false,
        outcome: "timeout",
        ratingEnabled: true,
      };
  }
}
