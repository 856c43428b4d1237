/**
 * Typed client for the praxis HTTP API.
 *
 * Every UI view is reconstructible from these endpoints; the client holds
 * no state of its own. Streaming replies arrive as server-sent events and
 * are surfaced through onDelta callbacks plus a final terminal event.
 */

export interface ExerciseSlot {
  name: string;
  description: string;
  default: string;
  required: boolean;
}

export interface ExerciseSummary {
  id: string;
  title: string;
  kind: string;
  steps: { index: number; name: string }[];
  slots: ExerciseSlot[];
}

export interface SessionHandle {
  session_id: string;
  exercise_id: string;
  created_at: string;
  status: string;
}

export interface TranscriptTurn {
  ordinal: number;
  role: "system" | "user" | "assistant";
  text: string;
  step_index: number;
  markers?: string[];
  flags?: string[];
}

export interface TranscriptView {
  session_id: string;
  exercise_id: string;
  title: string;
  kind: string;
  turns: TranscriptTurn[];
  hide_instructions: boolean;
  status?: string;
  read_only?: boolean;
  step_trace?: [number, number][];
  step_names?: Record<string, string>;
  findings?: { turn_ordinal: number; rule: string; evidence: string; severity: string }[];
  annotations?: { author: string; turn_ordinal: number; note: string; created_at: string }[];
}

export interface MessageResult {
  text: string;
  status: string;
  stepIndex?: number;
}

export interface BlueprintResult {
  opener: string;
  body: string;
  fenced: boolean;
  closer: string | null;
  rendered: string;
}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

/** The service surface the views depend on (PraxisApi implements it). */
export interface Api {
  listExercises(): Promise<ExerciseSummary[]>;
  createSession(
    exerciseId: string,
    bindings?: Record<string, string>,
    hideInstructions?: boolean,
  ): Promise<SessionHandle>;
  sendMessageStreaming(
    sessionId: string,
    text: string,
    onDelta: (delta: string) => void,
  ): Promise<MessageResult>;
  sendMessage(sessionId: string, text: string): Promise<MessageResult>;
  getTranscript(sessionId: string, viewer: "student" | "instructor"): Promise<TranscriptView>;
  resolveShare(token: string): Promise<TranscriptView>;
  createShare(sessionId: string): Promise<{ token: string; url: string }>;
  annotate(
    sessionId: string,
    turnOrdinal: number,
    author: string,
    note: string,
  ): Promise<TranscriptView>;
  expandBlueprint(kind: string, answers: Record<string, string>): Promise<BlueprintResult>;
}

async function parseError(response: Response): Promise<never> {
  let code = "error";
  let message = `${response.status} ${response.statusText}`;
  try {
    const body = await response.json();
    if (body?.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(code, message, response.status);
}

export class PraxisApi implements Api {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  listExercises(): Promise<ExerciseSummary[]> {
    return this.request("/exercises");
  }

  createSession(
    exerciseId: string,
    bindings: Record<string, string> = {},
    hideInstructions = false,
  ): Promise<SessionHandle> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify({
        exercise_id: exerciseId,
        bindings,
        hide_instructions: hideInstructions,
      }),
    });
  }

  /**
   * Send one student message over SSE. Deltas stream through onDelta; the
   * resolved value is the terminal event (its text is the canonical full
   * reply, byte-equal to what the server stored).
   */
  async sendMessageStreaming(
    sessionId: string,
    text: string,
    onDelta: (delta: string) => void,
  ): Promise<MessageResult> {
    const response = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json", Accept: "text/event-stream" },
      body: JSON.stringify({ text, stream: true }),
    });
    if (!response.ok) await parseError(response);
    if (!response.body) throw new ApiError("error", "response had no body", 0);

    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let terminal: MessageResult | null = null;

    const handleEvent = (payload: string) => {
      const event = JSON.parse(payload);
      if (event.error) {
        throw new ApiError(event.error.code, event.error.message, 0);
      }
      if (event.delta !== undefined) onDelta(event.delta as string);
      if (event.done) {
        terminal = { text: event.text, status: event.status, stepIndex: event.step_index };
      }
    };

    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let boundary;
      while ((boundary = buffer.indexOf("\n\n")) >= 0) {
        const frame = buffer.slice(0, boundary);
        buffer = buffer.slice(boundary + 2);
        for (const line of frame.split("\n")) {
          if (line.startsWith("data: ")) handleEvent(line.slice(6));
        }
      }
    }
    if (!terminal) throw new ApiError("error", "stream ended without a terminal event", 0);
    return terminal;
  }

  async sendMessage(sessionId: string, text: string): Promise<MessageResult> {
    const body = await this.request<{ reply: string; status: string; step_index?: number }>(
      `/sessions/${sessionId}/messages`,
      { method: "POST", body: JSON.stringify({ text }) },
    );
    return { text: body.reply, status: body.status, stepIndex: body.step_index };
  }

  getTranscript(sessionId: string, viewer: "student" | "instructor"): Promise<TranscriptView> {
    return this.request(`/sessions/${sessionId}/transcript?viewer=${viewer}`);
  }

  resolveShare(token: string): Promise<TranscriptView> {
    return this.request(`/share/${token}`);
  }

  createShare(sessionId: string): Promise<{ token: string; url: string }> {
    return this.request(`/sessions/${sessionId}/share`, { method: "POST" });
  }

  annotate(sessionId: string, turnOrdinal: number, author: string, note: string): Promise<TranscriptView> {
    return this.request(`/sessions/${sessionId}/annotations`, {
      method: "POST",
      body: JSON.stringify({ author, turn_ordinal: turnOrdinal, note }),
    });
  }

  expandBlueprint(kind: string, answers: Record<string, string>): Promise<BlueprintResult> {
    return this.request("/blueprints", {
      method: "POST",
      body: JSON.stringify({ kind, answers }),
    });
  }
}
