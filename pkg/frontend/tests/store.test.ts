import { beforeEach, describe, expect, it } from "vitest";

import {
  ApiClient,
  ApiError,
  GuidingQuestion,
  SessionState,
  TerminatedTurn,
  TurnResult,
} from "../src/api.js";
import { SessionStore } from "../src/store.js";

function question(text: string, quality = 0.5): GuidingQuestion {
  return {
    text,
    target_concept: "eor",
    align: 0.9,
    mi: 0.2,
    complexity: 0.5,
    quality,
    mode: "understanding-biased",
  };
}

function turnResult(overrides: Partial<TurnResult> = {}): TurnResult {
  return {
    response: "Tutor answer.",
    touched_concepts: ["eor"],
    theta_after: [0.4, 0.1, 0.1, 0.1, 0.1],
    guiding_questions: [question("Q one?"), question("Q two?")],
    branch: "low",
    inspiring_texts: [],
    warnings: [],
    ...overrides,
  };
}

class FakeApi {
  state: SessionState = {
    session_id: "s1",
    concepts: ["A", "B", "C", "D", "E"],
    concept_ids: ["a", "b", "c", "d", "e"],
    theta: [0.1, 0.1, 0.1, 0.1, 0.1],
    epsilon_low: 1,
    terminated: false,
    rounds: 0,
  };
  nextTurn: TurnResult | TerminatedTurn | Error = turnResult();
  turnCalls: string[] = [];
  resolveTurn: (() => void) | null = null;
  holdTurns = false;

  async createSession() {
    return { session_id: "s1", theta: this.state.theta };
  }

  async getState() {
    return { ...this.state, theta: [...this.state.theta] };
  }

  async getTranscript() {
    return { session_id: "s1", turns: [] };
  }

  async submitTurn(_sessionId: string, query: string) {
    this.turnCalls.push(query);
    if (this.holdTurns) {
      await new Promise<void>((resolve) => {
        this.resolveTurn = resolve;
      });
    }
    if (this.nextTurn instanceof Error) {
      throw this.nextTurn;
    }
    return this.nextTurn;
  }
}

describe("SessionStore", () => {
  let api: FakeApi;
  let store: SessionStore;

  beforeEach(async () => {
    api = new FakeApi();
    store = new SessionStore(api as unknown as ApiClient);
    await store.start();
  });

  it("starts with the server's radar payload and input enabled", () => {
    expect(store.view.sessionId).toBe("s1");
    expect(store.view.radar.concepts).toHaveLength(5);
    expect(store.view.inputDisabled).toBe(false);
  });

  it("appends messages, replaces chips and refreshes the radar on a turn", async () => {
    api.state.theta = [0.4, 0.1, 0.1, 0.1, 0.1]; // state served after the turn
    await store.submitTurn("What is EOR?");
    expect(store.view.messages).toEqual([
      { role: "user", text: "What is EOR?" },
      { role: "assistant", text: "Tutor answer." },
    ]);
    expect(store.view.chips.map((c) => c.text)).toEqual(["Q one?", "Q two?"]);
    expect(store.view.branch).toBe("low");
    expect(store.view.radar.theta).toEqual([0.4, 0.1, 0.1, 0.1, 0.1]);
    expect(store.view.radar.previous).toEqual([0.1, 0.1, 0.1, 0.1, 0.1]);
  });

  it("caps chips at five", async () => {
    api.nextTurn = turnResult({
      guiding_questions: Array.from({ length: 7 }, (_, i) => question(`Q${i}?`)),
    });
    await store.submitTurn("hello eor");
    expect(store.view.chips).toHaveLength(5);
  });

  it("clicking a chip submits its text verbatim", async () => {
    await store.submitTurn("What is EOR?");
    await store.clickChip(1);
    expect(api.turnCalls).toEqual(["What is EOR?", "Q two?"]);
  });

  it("shows the busy notice and keeps state on 409 busy", async () => {
    await store.submitTurn("first");
    const before = JSON.stringify({
      messages: store.view.messages,
      chips: store.view.chips,
      radar: store.view.radar,
    });
    api.nextTurn = new ApiError(409, "busy", "a turn is already running");
    await store.submitTurn("second");
    expect(store.view.busyNotice).toBe(true);
    expect(store.view.errorBanner).toBeNull();
    expect(JSON.stringify({
      messages: store.view.messages,
      chips: store.view.chips,
      radar: store.view.radar,
    })).toBe(before);
  });

  it("shows the error banner and keeps state on network failure", async () => {
    api.nextTurn = new Error("fetch failed");
    await store.submitTurn("boom");
    expect(store.view.errorBanner).toBe("fetch failed");
    expect(store.view.messages).toHaveLength(0);
    expect(store.view.busyNotice).toBe(false);
  });

  it("disables input when the server reports termination", async () => {
    api.nextTurn = { session_id: "s1", terminated: true };
    await store.submitTurn("exit");
    expect(store.view.inputDisabled).toBe(true);
    expect(store.view.chips).toHaveLength(0);
    await store.submitTurn("after exit");
    expect(api.turnCalls).toEqual(["exit"]); // nothing sent once disabled
  });

  it("serializes turns: a second submit while one is in flight is dropped", async () => {
    api.holdTurns = true;
    const first = store.submitTurn("one");
    await Promise.resolve(); // let the first request start
    await store.submitTurn("two"); // dropped client-side
    api.holdTurns = false;
    api.resolveTurn?.();
    await first;
    expect(api.turnCalls).toEqual(["one"]);
  });

  it("ignores empty queries", async () => {
    await store.submitTurn("   ");
    expect(api.turnCalls).toHaveLength(0);
  });
});
