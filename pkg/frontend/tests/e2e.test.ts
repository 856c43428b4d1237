/**
 * End-to-end: the UI layer completes a full negotiation session against a
 * served scripted backend. The backend is the real python service spawned
 * as a child process; the client is the real PraxisApi over HTTP.
 */
import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { PraxisApi } from "../src/api.js";
import { ChatController } from "../src/chat.js";
import { ReviewController } from "../src/review.js";

const PORT = 8473;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let studentTurns: string[] = [];

function generateDialogue(dir: string): { scriptPath: string; student: string[] } {
  const output = execFileSync(
    "python3",
    [
      "-c",
      [
        "import json",
        "from praxis.catalog import get_exercise",
        "from praxis.harness import cooperative_dialogue",
        "student, assistant = cooperative_dialogue(get_exercise('negotiation'))",
        "print(json.dumps({'student': student, 'assistant': assistant}))",
      ].join("\n"),
    ],
    { encoding: "utf-8" },
  );
  const dialogue = JSON.parse(output) as { student: string[]; assistant: string[] };
  const scriptPath = join(dir, "script.json");
  writeFileSync(scriptPath, JSON.stringify({ replies: dialogue.assistant }));
  return { scriptPath, student: dialogue.student };
}

async function waitForHealth(): Promise<void> {
  for (let attempt = 0; attempt < 60; attempt++) {
    try {
      const response = await fetch(`${BASE}/health`);
      if (response.ok) return;
    } catch {
      // server not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("backend never became healthy");
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "praxis-e2e-"));
  const { scriptPath, student } = generateDialogue(dir);
  studentTurns = student;
  server = spawn(
    "python3",
    [
      "-m",
      "praxis.cli",
      "serve",
      "--port",
      String(PORT),
      "--scripted",
      scriptPath,
      "--data-dir",
      join(dir, "data"),
    ],
    { stdio: "ignore" },
  );
  await waitForHealth();
}, 30_000);

afterAll(() => {
  server?.kill();
});

describe("full negotiation session over the served backend", () => {
  it("completes the exercise and matches the stored transcript exactly", async () => {
    const api = new PraxisApi(BASE);
    const buffers: string[] = [];
    const watching = new ChatController(api, (s) => {
      if (s.streamingBuffer) buffers.push(s.streamingBuffer);
    });

    await watching.startExercise("negotiation", {}, true);
    expect(watching.state.turns.every((t) => t.role !== "system")).toBe(true);

    for (const text of studentTurns) {
      await watching.sendMessage(text);
    }
    expect(watching.state.currentStep).toBe(6);
    expect(buffers.length).toBeGreaterThan(0); // chunks really streamed

    // Exact equality: what the UI rendered is what the store holds.
    const sessionId = watching.state.handle!.session_id;
    const stored = await api.getTranscript(sessionId, "student");
    expect(watching.state.turns.map((t) => t.text)).toEqual(stored.turns.map((t) => t.text));
    expect(watching.state.turns.map((t) => t.role)).toEqual(stored.turns.map((t) => t.role));

    // Hidden instructions: no view reachable from the student seat ever
    // contains the system prompt.
    expect(stored.turns.every((t) => t.role !== "system")).toBe(true);
    const reloaded = new ChatController(api);
    await reloaded.resume(sessionId);
    expect(reloaded.state.turns.every((t) => t.role !== "system")).toBe(true);

    const share = await api.createShare(sessionId);
    const review = new ReviewController(api);
    await review.open({ token: share.token });
    expect(review.state.canAnnotate).toBe(false);
    expect(review.state.transcript!.turns.every((t) => t.role !== "system")).toBe(true);

    // The instructor, by contrast, still sees everything.
    const instructor = await api.getTranscript(sessionId, "instructor");
    expect(instructor.turns.some((t) => t.role === "system")).toBe(true);
    expect(instructor.step_trace?.length).toBe(instructor.turns.length);
  }, 60_000);

  it("wizard round-trips against the live blueprint endpoint", async () => {
    const api = new PraxisApi(BASE);
    const result = await api.expandBlueprint("tutor", { topic: "negotiation anchors" });
    expect(result.opener.startsWith("You are an AI tutor and your job is to help the user")).toBe(
      true,
    );
    expect(result.rendered.includes("learning styles")).toBe(false);
  });
});
