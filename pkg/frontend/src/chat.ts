/**
 * Chat view logic: one live exercise session from the student's seat.
 *
 * The controller owns a ChatViewState and keeps it consistent with the
 * service: rendered turns stay ordinal-ordered, the streaming buffer is
 * cleared on every terminal event, and the whole state can be rebuilt
 * from the transcript endpoint after a reload. Only one message is in
 * flight at a time.
 */
import { Api, MessageResult, SessionHandle, TranscriptTurn } from "./api.js";

export interface RenderedTurn {
  ordinal: number;
  role: "user" | "assistant" | "system";
  text: string;
  stepIndex: number;
}

export interface ChatViewState {
  handle: SessionHandle | null;
  turns: RenderedTurn[];
  streamingBuffer: string;
  composerText: string;
  composerEnabled: boolean;
  showStepBanner: boolean;
  currentStep: number | null;
  error: string | null;
}

export function emptyChatState(showStepBanner = false): ChatViewState {
  return {
    handle: null,
    turns: [],
    streamingBuffer: "",
    composerText: "",
    composerEnabled: false,
    showStepBanner,
    currentStep: null,
    error: null,
  };
}

function toRendered(turns: TranscriptTurn[]): RenderedTurn[] {
  return turns
    .map((t) => ({ ordinal: t.ordinal, role: t.role, text: t.text, stepIndex: t.step_index }))
    .sort((a, b) => a.ordinal - b.ordinal);
}

export class ChatController {
  readonly state: ChatViewState;
  private sending = false;

  constructor(
    private readonly api: Api,
    private readonly onChange: (state: ChatViewState) => void = () => {},
    showStepBanner = false,
  ) {
    this.state = emptyChatState(showStepBanner);
  }

  private emit(): void {
    this.onChange(this.state);
  }

  /** Create the session and render whatever the service already recorded. */
  async startExercise(
    exerciseId: string,
    bindings: Record<string, string> = {},
    hideInstructions = false,
  ): Promise<ChatViewState> {
    const handle = await this.api.createSession(exerciseId, bindings, hideInstructions);
    this.state.handle = handle;
    this.state.composerEnabled = handle.status === "active";
    await this.reload();
    return this.state;
  }

  /** Rebuild rendered turns from the stored transcript (student view). */
  async reload(): Promise<void> {
    if (!this.state.handle) throw new Error("no session");
    const view = await this.api.getTranscript(this.state.handle.session_id, "student");
    this.state.turns = toRendered(view.turns);
    if (view.status) {
      this.state.handle.status = view.status;
      this.state.composerEnabled = view.status === "active";
    }
    this.emit();
  }

  /** Resume an existing session after a page reload. */
  async resume(sessionId: string): Promise<void> {
    const view = await this.api.getTranscript(sessionId, "student");
    this.state.handle = {
      session_id: view.session_id,
      exercise_id: view.exercise_id,
      created_at: "",
      status: view.status ?? "wrapped",
    };
    this.state.turns = toRendered(view.turns);
    this.state.composerEnabled = view.status === "active";
    this.emit();
  }

  /**
   * Send the composer text: the user turn renders optimistically, chunks
   * append live into the streaming buffer, and the final turn is
   * reconciled against the terminal event's canonical text.
   */
  async sendMessage(text: string): Promise<ChatViewState> {
    const handle = this.state.handle;
    if (!handle) throw new Error("no session");
    if (this.sending) throw new Error("a message is already in flight");
    if (!this.state.composerEnabled) throw new Error("session is not active");

    this.sending = true;
    this.state.composerText = "";
    const nextOrdinal = this.state.turns.length
      ? this.state.turns[this.state.turns.length - 1]!.ordinal + 1
      : 0;
    this.state.turns.push({
      ordinal: nextOrdinal,
      role: "user",
      text,
      stepIndex: this.state.currentStep ?? 1,
    });
    this.state.streamingBuffer = "";
    this.emit();

    let result: MessageResult;
    try {
      result = await this.api.sendMessageStreaming(handle.session_id, text, (delta) => {
        this.state.streamingBuffer += delta;
        this.emit();
      });
    } catch (error) {
      this.sending = false;
      if ((error as { code?: string }).code === "conflict") {
        this.state.composerEnabled = false;
        this.state.error = "This session has wrapped up; the composer is disabled.";
        this.emit();
        return this.state;
      }
      this.state.error = (error as Error).message;
      this.emit();
      throw error;
    }

    // Terminal event: clear the buffer and commit the canonical turn text.
    this.state.streamingBuffer = "";
    this.state.turns.push({
      ordinal: nextOrdinal + 1,
      role: "assistant",
      text: result.text,
      stepIndex: result.stepIndex ?? this.state.currentStep ?? 1,
    });
    this.state.currentStep = result.stepIndex ?? this.state.currentStep;
    if (result.status !== "active") this.state.composerEnabled = false;
    if (handle) handle.status = result.status;
    this.sending = false;
    this.emit();
    return this.state;
  }

  stepBannerText(stepNames: Record<string, string> | undefined, step: number): string {
    const name = stepNames?.[String(step)] ?? `STEP ${step}`;
    return `STEP ${step}: ${name}`;
  }
}
