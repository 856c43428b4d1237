/**
 * Transcript review: instructors browse flagged turns and attach notes;
 * share-token viewers get the same transcript read-only.
 */
import { Api, TranscriptView } from "./api.js";

export interface ReviewViewState {
  transcript: TranscriptView | null;
  selectedTurn: number;
  annotationDraft: string;
  canAnnotate: boolean;
  error: string | null;
}

export function emptyReviewState(): ReviewViewState {
  return {
    transcript: null,
    selectedTurn: 0,
    annotationDraft: "",
    canAnnotate: false,
    error: null,
  };
}

export class ReviewController {
  readonly state: ReviewViewState;

  constructor(
    private readonly api: Api,
    private readonly onChange: (state: ReviewViewState) => void = () => {},
  ) {
    this.state = emptyReviewState();
  }

  private emit(): void {
    this.onChange(this.state);
  }

  /** Load by session id (instructor, annotatable) or share token (read-only). */
  async open(ref: { sessionId?: string; token?: string }): Promise<ReviewViewState> {
    if (ref.token) {
      this.state.transcript = await this.api.resolveShare(ref.token);
      this.state.canAnnotate = false;
    } else if (ref.sessionId) {
      this.state.transcript = await this.api.getTranscript(ref.sessionId, "instructor");
      this.state.canAnnotate = true;
    } else {
      throw new Error("need a session id or a share token");
    }
    this.state.selectedTurn = 0;
    this.emit();
    return this.state;
  }

  selectTurn(ordinal: number): void {
    const transcript = this.state.transcript;
    if (!transcript) throw new Error("no transcript");
    const known = transcript.turns.some((t) => t.ordinal === ordinal);
    if (!known) throw new Error(`turn ${ordinal} is not in this transcript`);
    this.state.selectedTurn = ordinal;
    this.emit();
  }

  flagsFor(ordinal: number): string[] {
    const transcript = this.state.transcript;
    if (!transcript) return [];
    const turn = transcript.turns.find((t) => t.ordinal === ordinal);
    if (turn?.flags?.length) return turn.flags;
    return (transcript.findings ?? [])
      .filter((f) => f.turn_ordinal === ordinal)
      .map((f) => f.rule);
  }

  async submitAnnotation(author: string): Promise<void> {
    const transcript = this.state.transcript;
    if (!transcript) throw new Error("no transcript");
    if (!this.state.canAnnotate) throw new Error("read-only view");
    const note = this.state.annotationDraft.trim();
    if (!note) return;
    this.state.transcript = await this.api.annotate(
      transcript.session_id,
      this.state.selectedTurn,
      author,
      note,
    );
    this.state.annotationDraft = "";
    this.emit();
  }
}
