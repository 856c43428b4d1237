/**
 * DOM shell: hash-routed views over the controllers.
 *
 *   #/                      exercise picker (+ slot form)
 *   #/chat/<session-id>     live chat
 *   #/review/<session-id>   instructor review
 *   #/share/<token>         read-only shared transcript
 *   #/wizard/<kind>         blueprint interview
 */
import { ExerciseSummary, PraxisApi, TranscriptView } from "./api.js";
import { ChatController, ChatViewState } from "./chat.js";
import { ReviewController } from "./review.js";
import { BlueprintWizard } from "./wizard.js";

const api = new PraxisApi("");
let chat: ChatController | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function root(): HTMLElement {
  return document.getElementById("app")!;
}

function setView(...children: (Node | string)[]): void {
  const app = root();
  app.replaceChildren(...children);
}

// ---------------------------------------------------------------- picker

async function renderPicker(): Promise<void> {
  const exercises = await api.listExercises();
  const list = el("div", { class: "exercise-list" });
  for (const exercise of exercises) {
    list.append(renderExerciseCard(exercise));
  }
  setView(
    el("h1", {}, "Pick an exercise"),
    list,
    el(
      "p",
      {},
      el("a", { href: "#/wizard/tutor" }, "Build a tutor prompt"),
      " · ",
      el("a", { href: "#/wizard/teaching_assistant" }, "Build a teaching-assistant prompt"),
    ),
  );
}

function renderExerciseCard(exercise: ExerciseSummary): HTMLElement {
  const form = el("form", { class: "start-form" });
  const bindings: Record<string, HTMLInputElement> = {};
  for (const slot of exercise.slots) {
    const input = el("input", {
      name: slot.name,
      placeholder: slot.default || slot.description,
    });
    if (slot.required) input.required = true;
    bindings[slot.name] = input;
    form.append(el("label", {}, `${slot.name}: `, input));
  }
  const hide = el("input", { type: "checkbox" });
  form.append(el("label", { class: "hide-toggle" }, hide, " hide instructions from me"));
  const button = el("button", { type: "submit" }, "Start");
  form.append(button);
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const values: Record<string, string> = {};
    for (const [name, input] of Object.entries(bindings)) {
      if (input.value.trim()) values[name] = input.value.trim();
      else if (input.required) {
        input.focus();
        return; // required slot empty: block submission
      }
    }
    chat = new ChatController(api, renderChatState);
    const state = await chat.startExercise(exercise.id, values, hide.checked);
    location.hash = `#/chat/${state.handle!.session_id}`;
    renderChatState(state);
  });
  return el(
    "section",
    { class: "exercise-card" },
    el("h2", {}, exercise.title),
    el("p", { class: "kind" }, exercise.kind),
    form,
  );
}

// ------------------------------------------------------------------ chat

function renderChatState(state: ChatViewState): void {
  if (!location.hash.startsWith("#/chat/")) return;
  const messages = el("div", { class: "messages" });
  let lastStep: number | null = null;
  for (const turn of state.turns) {
    if (state.showStepBanner && turn.stepIndex !== lastStep) {
      messages.append(el("div", { class: "step-banner" }, `STEP ${turn.stepIndex}`));
      lastStep = turn.stepIndex;
    }
    messages.append(
      el("div", { class: `turn turn-${turn.role}` }, el("span", { class: "who" }, turn.role), turn.text),
    );
  }
  if (state.streamingBuffer) {
    messages.append(el("div", { class: "turn turn-assistant streaming" }, state.streamingBuffer));
  }

  const input = el("textarea", { class: "composer", rows: "2" });
  input.value = state.composerText;
  const send = el("button", {}, "Send");
  if (!state.composerEnabled) {
    input.disabled = true;
    send.disabled = true;
  }
  const notice = state.composerEnabled
    ? ""
    : el("p", { class: "notice" }, "This session has wrapped up.");
  send.addEventListener("click", async () => {
    const text = input.value.trim();
    if (!text || !chat) return;
    input.value = "";
    await chat.sendMessage(text);
  });
  const shareButton = el("button", { class: "share" }, "Share link");
  shareButton.addEventListener("click", async () => {
    if (!state.handle) return;
    const share = await api.createShare(state.handle.session_id);
    prompt("Share this read-only link:", `${location.origin}/#/share/${share.token}`);
  });
  setView(
    el("h1", {}, state.handle ? `Session ${state.handle.session_id.slice(0, 8)}` : "Chat"),
    messages,
    el("div", { class: "composer-row" }, input, send),
    notice,
    shareButton,
  );
  messages.scrollTop = messages.scrollHeight;
}

async function renderChatRoute(sessionId: string): Promise<void> {
  if (!chat || chat.state.handle?.session_id !== sessionId) {
    chat = new ChatController(api, renderChatState);
    await chat.resume(sessionId);
  }
  renderChatState(chat.state);
}

// ---------------------------------------------------------------- review

function describeTranscript(view: TranscriptView): HTMLElement {
  const header = el(
    "div",
    { class: "review-header" },
    el("h1", {}, view.title || view.exercise_id),
    el("p", {}, `session ${view.session_id}${view.read_only ? " (read-only)" : ""}`),
  );
  return header;
}

async function renderReview(ref: { sessionId?: string; token?: string }): Promise<void> {
  const review = new ReviewController(api, (state) => {
    if (!state.transcript) return;
    const view = state.transcript;
    const turnList = el("div", { class: "messages review" });
    let lastStep: number | null = null;
    for (const turn of view.turns) {
      if (turn.step_index !== lastStep) {
        const name = view.step_names?.[String(turn.step_index)] ?? "";
        turnList.append(
          el("div", { class: "step-banner" }, `STEP ${turn.step_index}${name ? `: ${name}` : ""}`),
        );
        lastStep = turn.step_index;
      }
      const flags = review.flagsFor(turn.ordinal);
      const row = el(
        "div",
        { class: `turn turn-${turn.role}${turn.ordinal === state.selectedTurn ? " selected" : ""}` },
        el("span", { class: "who" }, turn.role),
        turn.text,
        ...flags.map((flag) => el("span", { class: "flag" }, ` ⚑ ${flag}`)),
      );
      row.addEventListener("click", () => review.selectTurn(turn.ordinal));
      turnList.append(row);
    }

    const children: (Node | string)[] = [describeTranscript(view), turnList];
    if (state.canAnnotate) {
      const draft = el("textarea", { rows: "2", class: "annotation-draft" });
      draft.value = state.annotationDraft;
      draft.addEventListener("input", () => (state.annotationDraft = draft.value));
      const submit = el("button", {}, `Annotate turn ${state.selectedTurn}`);
      submit.addEventListener("click", () => void review.submitAnnotation("instructor"));
      children.push(el("div", { class: "annotate-row" }, draft, submit));
    }
    const notes = view.annotations ?? [];
    if (notes.length) {
      children.push(
        el(
          "ol",
          { class: "notes" },
          ...notes.map((a) => el("li", {}, `(${a.author}, turn ${a.turn_ordinal}) ${a.note}`)),
        ),
      );
    }
    setView(...children);
  });
  await review.open(ref);
}

// ---------------------------------------------------------------- wizard

function renderWizard(kind: "tutor" | "teaching_assistant"): void {
  const wizard = new BlueprintWizard(api, kind, (state) => {
    if (state.result) {
      setView(
        el("h1", {}, "Your prompt"),
        el("pre", { class: "generated" }, state.result.rendered),
        el("p", {}, el("a", { href: "#/" }, "back to exercises")),
      );
      return;
    }
    const question = wizard.currentQuestion;
    if (!question) {
      const submit = el("button", {}, "Generate prompt");
      submit.addEventListener("click", () => void wizard.submit());
      setView(el("h1", {}, "All set"), el("p", {}, "Ready to generate your prompt."), submit);
      return;
    }
    // One question on screen at a time, by construction.
    const input = el("textarea", { rows: "3", class: "wizard-answer" });
    const next = el("button", {}, "Next");
    next.addEventListener("click", () => wizard.answer(input.value));
    const children: (Node | string)[] = [
      el("h1", {}, kind === "tutor" ? "Tutor blueprint" : "Teaching assistant blueprint"),
      el("p", { class: "question" }, question.prompt),
      input,
      next,
    ];
    if (state.error) children.push(el("p", { class: "error" }, state.error));
    setView(...children);
  });
  wizard["onChange"](wizard.state);
}

// ---------------------------------------------------------------- router

async function route(): Promise<void> {
  const hash = location.hash || "#/";
  try {
    if (hash.startsWith("#/chat/")) await renderChatRoute(hash.slice("#/chat/".length));
    else if (hash.startsWith("#/review/"))
      await renderReview({ sessionId: hash.slice("#/review/".length) });
    else if (hash.startsWith("#/share/")) await renderReview({ token: hash.slice("#/share/".length) });
    else if (hash.startsWith("#/wizard/"))
      renderWizard(hash.slice("#/wizard/".length) as "tutor" | "teaching_assistant");
    else await renderPicker();
  } catch (error) {
    setView(el("h1", {}, "Something went wrong"), el("p", { class: "error" }, (error as Error).message));
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.addEventListener("hashchange", () => void route());
  window.addEventListener("DOMContentLoaded", () => void route());
}
