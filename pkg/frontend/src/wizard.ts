/**
 * Blueprint wizard: the guided interview as a form, one question per
 * screen so the flow asks exactly one thing at a time, then submits the
 * collected answers to the compiler endpoint.
 */
import { Api, BlueprintResult } from "./api.js";

export interface WizardQuestion {
  field: string;
  prompt: string;
  required: boolean;
}

export const TUTOR_QUESTIONS: WizardQuestion[] = [
  {
    field: "topic",
    prompt: "Name one thing that you know really well and would like others to learn.",
    required: true,
  },
  { field: "key_elements", prompt: "What are the key elements of the topic?", required: false },
  {
    field: "sticking_points",
    prompt: "What are common sticking points or misconceptions?",
    required: false,
  },
  {
    field: "examples_analogies",
    prompt: "What examples or analogies help when explaining it?",
    required: false,
  },
];

export const TA_QUESTIONS: WizardQuestion[] = [
  {
    field: "task",
    prompt: "Name one task that you would like to speed up or automate.",
    required: true,
  },
  { field: "elements", prompt: "What specific elements should the output include?", required: false },
  { field: "formatting", prompt: "Any formatting or organizing to apply?", required: false },
  { field: "categorization", prompt: "How should different topics be categorized?", required: false },
];

export interface WizardState {
  kind: "tutor" | "teaching_assistant";
  questionIndex: number;
  answers: Record<string, string>;
  result: BlueprintResult | null;
  error: string | null;
}

export class BlueprintWizard {
  readonly state: WizardState;

  constructor(
    private readonly api: Api,
    kind: "tutor" | "teaching_assistant",
    private readonly onChange: (state: WizardState) => void = () => {},
  ) {
    this.state = { kind, questionIndex: 0, answers: {}, result: null, error: null };
  }

  private emit(): void {
    this.onChange(this.state);
  }

  get questions(): WizardQuestion[] {
    return this.state.kind === "tutor" ? TUTOR_QUESTIONS : TA_QUESTIONS;
  }

  /** The single question currently on screen, or null once done. */
  get currentQuestion(): WizardQuestion | null {
    return this.questions[this.state.questionIndex] ?? null;
  }

  get done(): boolean {
    return this.state.questionIndex >= this.questions.length;
  }

  /** Record the answer to the current question and advance by one. */
  answer(text: string): void {
    const question = this.currentQuestion;
    if (!question) throw new Error("interview is already complete");
    if (question.required && !text.trim()) {
      this.state.error = "This question needs an answer before we continue.";
      this.emit();
      return;
    }
    this.state.error = null;
    this.state.answers[question.field] = text.trim();
    this.state.questionIndex += 1;
    this.emit();
  }

  back(): void {
    if (this.state.questionIndex > 0) {
      this.state.questionIndex -= 1;
      this.emit();
    }
  }

  async submit(): Promise<BlueprintResult> {
    if (!this.done) throw new Error("answer every question first");
    const result = await this.api.expandBlueprint(this.state.kind, this.state.answers);
    this.state.result = result;
    this.emit();
    return result;
  }
}
