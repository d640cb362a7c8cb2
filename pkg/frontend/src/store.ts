// Session view-state machine. The view is always rebuilt from server
// payloads (no optimistic updates), at most one turn request is in flight,
// and a busy or failed request leaves the conversation state untouched.

import {
  ApiClient,
  ApiError,
  GuidingQuestion,
  SessionState,
  TurnResult,
  isTerminated,
} from "./api.js";

export interface ChatMessage {
  role: "user" | "assistant";
  text: string;
}

export interface Chip {
  text: string;
  quality: number;
  branch: "low" | "high";
}

export interface RadarView {
  concepts: string[];
  theta: number[];
  previous: number[] | null;
  epsilonLow: number;
}

export interface SessionView {
  sessionId: string | null;
  messages: ChatMessage[];
  chips: Chip[];
  branch: "low" | "high" | null;
  radar: RadarView;
  busyNotice: boolean;
  errorBanner: string | null;
  inputDisabled: boolean;
  inFlight: boolean;
}

const MAX_CHIPS = 5;

function emptyView(): SessionView {
  return {
    sessionId: null,
    messages: [],
    chips: [],
    branch: null,
    radar: { concepts: [], theta: [], previous: null, epsilonLow: 1.0 },
    busyNotice: false,
    errorBanner: null,
    inputDisabled: true,
    inFlight: false,
  };
}

function chipsFrom(questions: GuidingQuestion[], branch: "low" | "high"): Chip[] {
  return questions.slice(0, MAX_CHIPS).map((q) => ({
    text: q.text,
    quality: q.quality,
    branch,
  }));
}

export class SessionStore {
  view: SessionView = emptyView();
  private listeners: Array<(view: SessionView) => void> = [];

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: (view: SessionView) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.view);
    }
  }

  private applyState(state: SessionState, previous: number[] | null): void {
    this.view.radar = {
      concepts: state.concepts,
      theta: state.theta,
      previous,
      epsilonLow: state.epsilon_low,
    };
    if (state.terminated) {
      this.view.inputDisabled = true;
    }
  }

  async start(initialTheta?: number[]): Promise<void> {
    const created = await this.api.createSession(initialTheta);
    const state = await this.api.getState(created.session_id);
    this.view = emptyView();
    this.view.sessionId = created.session_id;
    this.view.inputDisabled = false;
    this.applyState(state, null);
    this.emit();
  }

  /** Rebuild the whole view from the server, e.g. after a page reload. */
  async resume(sessionId: string): Promise<void> {
    const state = await this.api.getState(sessionId);
    const transcript = await this.api.getTranscript(sessionId);
    this.view = emptyView();
    this.view.sessionId = sessionId;
    this.view.inputDisabled = state.terminated;
    for (const turn of transcript.turns) {
      this.view.messages.push({ role: "user", text: turn.query });
      this.view.messages.push({ role: "assistant", text: turn.response });
    }
    const last = transcript.turns[transcript.turns.length - 1];
    if (last) {
      this.view.chips = chipsFrom(last.questions, last.branch);
      this.view.branch = last.branch;
    }
    this.applyState(state, null);
    this.emit();
  }

  async submitTurn(query: string): Promise<void> {
    const sessionId = this.view.sessionId;
    if (!sessionId || this.view.inFlight || this.view.inputDisabled || !query.trim()) {
      return;
    }
    this.view.inFlight = true;
    this.view.busyNotice = false;
    this.view.errorBanner = null;
    this.emit();
    try {
      const result = await this.api.submitTurn(sessionId, query);
      if (isTerminated(result)) {
        this.view.inputDisabled = true;
        this.view.chips = [];
        return;
      }
      this.acceptTurn(query, result);
      // radar always re-reads server truth rather than trusting the turn payload
      const state = await this.api.getState(sessionId);
      this.applyState(state, this.view.radar.theta.length ? this.view.radar.theta : null);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409 && err.code === "busy") {
        this.view.busyNotice = true; // inline retry notice; nothing else changes
      } else {
        this.view.errorBanner = err instanceof Error ? err.message : String(err);
      }
    } finally {
      this.view.inFlight = false;
      this.emit();
    }
  }

  private acceptTurn(query: string, result: TurnResult): void {
    this.view.messages.push({ role: "user", text: query });
    this.view.messages.push({ role: "assistant", text: result.response });
    this.view.branch = result.branch;
    this.view.chips = chipsFrom(result.guiding_questions, result.branch);
  }

  /** Clicking a chip submits its text verbatim as the next query. */
  clickChip(index: number): Promise<void> {
    const chip = this.view.chips[index];
    if (!chip) {
      return Promise.resolve();
    }
    return this.submitTurn(chip.text);
  }
}
