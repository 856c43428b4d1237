import { describe, expect, it } from "vitest";

import { ChatController } from "../src/chat.js";
import { FakeApi } from "./fake_api.js";

describe("ChatController", () => {
  it("starts a session and renders existing turns", async () => {
    const api = new FakeApi();
    const chat = new ChatController(api);
    const state = await chat.startExercise("negotiation");
    expect(state.handle?.status).toBe("active");
    expect(state.composerEnabled).toBe(true);
    expect(state.turns.map((t) => t.role)).toEqual(["system"]);
  });

  it("streamed chunks concatenate to the final rendered text", async () => {
    const api = new FakeApi();
    const buffers: string[] = [];
    const controller = new ChatController(api, (s) => buffers.push(s.streamingBuffer));
    await controller.startExercise("negotiation");
    api.queueReply("A rather long scripted reply that arrives in several chunks.");
    const state = await controller.sendMessage("hello");

    const maxBuffer = buffers.reduce((a, b) => (b.length > a.length ? b : a), "");
    const finalTurn = state.turns[state.turns.length - 1]!;
    expect(finalTurn.role).toBe("assistant");
    expect(finalTurn.text).toBe("A rather long scripted reply that arrives in several chunks.");
    expect(maxBuffer).toBe(finalTurn.text); // live buffer accumulated every chunk
  });

  it("clears the streaming buffer on the terminal event", async () => {
    const api = new FakeApi();
    api.queueReply("short reply");
    const chat = new ChatController(api);
    await chat.startExercise("negotiation");
    const state = await chat.sendMessage("hi");
    expect(state.streamingBuffer).toBe("");
  });

  it("keeps rendered turns ordinal-ordered", async () => {
    const api = new FakeApi();
    const chat = new ChatController(api);
    await chat.startExercise("negotiation");
    api.queueReply("one");
    await chat.sendMessage("first");
    api.queueReply("two");
    await chat.sendMessage("second");
    const ordinals = chat.state.turns.map((t) => t.ordinal);
    expect(ordinals).toEqual([...ordinals].sort((a, b) => a - b));
    expect(new Set(ordinals).size).toBe(ordinals.length);
  });

  it("disables the composer when the session wraps", async () => {
    const api = new FakeApi();
    const chat = new ChatController(api);
    await chat.startExercise("negotiation");
    api.queueReply("LESSON COMPLETE, we are done.", { wraps: true });
    const state = await chat.sendMessage("finish it");
    expect(state.composerEnabled).toBe(false);
    await expect(chat.sendMessage("one more?")).rejects.toThrow(/not active/);
  });

  it("disables the composer with a notice on a conflict from the service", async () => {
    const api = new FakeApi();
    const chat = new ChatController(api);
    await chat.startExercise("negotiation");
    const session = api.sessions.get(chat.state.handle!.session_id)!;
    session.handle.status = "wrapped"; // wrapped behind the UI's back
    chat.state.composerEnabled = true; // stale client state
    const state = await chat.sendMessage("hello?");
    expect(state.composerEnabled).toBe(false);
    expect(state.error).toMatch(/wrapped/);
  });

  it("restores history from the transcript endpoint after a reload", async () => {
    const api = new FakeApi();
    const chat = new ChatController(api);
    await chat.startExercise("negotiation");
    api.queueReply("reply one");
    await chat.sendMessage("message one");
    const sessionId = chat.state.handle!.session_id;

    const reloaded = new ChatController(api);
    await reloaded.resume(sessionId);
    const stored = await api.getTranscript(sessionId, "student");
    expect(reloaded.state.turns.map((t) => t.text)).toEqual(stored.turns.map((t) => t.text));
  });

  it("never renders the system prompt in student view when hidden", async () => {
    const api = new FakeApi();
    const chat = new ChatController(api);
    await chat.startExercise("negotiation", {}, true);
    expect(chat.state.turns.every((t) => t.role !== "system")).toBe(true);
    api.queueReply("a reply");
    await chat.sendMessage("hi");
    const reloaded = new ChatController(api);
    await reloaded.resume(chat.state.handle!.session_id);
    expect(reloaded.state.turns.every((t) => t.role !== "system")).toBe(true);
  });

  it("rejects overlapping in-flight messages", async () => {
    const api = new FakeApi();
    const chat = new ChatController(api);
    await chat.startExercise("negotiation");
    api.queueReply("slow reply");
    const first = chat.sendMessage("one");
    await expect(chat.sendMessage("two")).rejects.toThrow(/in flight/);
    await first;
  });
});
