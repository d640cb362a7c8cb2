// Typed client for the guideq session API. Every method resolves with the
// parsed JSON payload or throws ApiError carrying the server's {code, message}.

export interface GuidingQuestion {
  text: string;
  target_concept: string;
  align: number;
  mi: number;
  complexity: number;
  quality: number;
  mode: string;
}

export interface InspiringText {
  fragment: string;
  concept_id: string;
  difficulty: number;
  suitability: number;
}

export interface TurnResult {
  response: string;
  touched_concepts: string[];
  theta_after: number[];
  guiding_questions: GuidingQuestion[];
  branch: "low" | "high";
  inspiring_texts: InspiringText[];
  warnings: string[];
}

export interface TerminatedTurn {
  session_id: string;
  terminated: true;
}

export interface SessionState {
  session_id: string;
  concepts: string[];
  concept_ids: string[];
  theta: number[];
  epsilon_low: number;
  terminated: boolean;
  rounds: number;
}

export interface CreatedSession {
  session_id: string;
  theta: number[];
}

export interface TranscriptTurn {
  round: number;
  query: string;
  response: string;
  touched_concepts: string[];
  branch: "low" | "high";
  theta_after: number[];
  questions: GuidingQuestion[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "error";
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  createSession(initialTheta?: number[]): Promise<CreatedSession> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify(initialTheta ? { initial_theta: initialTheta } : {}),
    });
  }

  submitTurn(sessionId: string, query: string): Promise<TurnResult | TerminatedTurn> {
    return this.request(`/sessions/${sessionId}/turns`, {
      method: "POST",
      body: JSON.stringify({ query }),
    });
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${sessionId}/state`);
  }

  getTranscript(sessionId: string): Promise<{ session_id: string; turns: TranscriptTurn[] }> {
    return this.request(`/sessions/${sessionId}/transcript`);
  }

  submitAnswer(sessionId: string, itemId: string, selectedIndex: number): Promise<{
    item_id: string;
    correct: boolean;
    answer_index: number;
    theta: number[];
  }> {
    return this.request(`/sessions/${sessionId}/answers`, {
      method: "POST",
      body: JSON.stringify({ item_id: itemId, selected_index: selectedIndex }),
    });
  }

  deleteSession(sessionId: string): Promise<void> {
    return this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }
}

export function isTerminated(turn: TurnResult | TerminatedTurn): turn is TerminatedTurn {
  return (turn as TerminatedTurn).terminated === true;
}
