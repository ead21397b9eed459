import assert from "node:assert/strict";
import { test } from "node:test";

import { BoundedQueue } from "../src/queue.js";
import { FEED_LIMIT, applyMessage, initialState } from "../src/state.js";
import { parseServerMessage, type GestureMessage, type ServerMessage } from "../src/types.js";

function gesture(name: string, ts: number): GestureMessage {
  return { type: "gesture", name, kind: "static", confidence: 0.9, ts };
}

function frame(ts: number): ServerMessage {
  return {
    type: "frame",
    landmarks: Array.from({ length: 21 }, () => [0.5, 0.5, 0] as [number, number, number]),
    handedness: "R",
    signal: false,
    ts,
  };
}

test("feed keeps timestamp order and never reorders", () => {
  const ui = initialState();
  applyMessage(ui, gesture("a", 10));
  applyMessage(ui, gesture("b", 20));
  applyMessage(ui, gesture("straggler", 15)); // late: dropped, not inserted
  assert.deepEqual(ui.feed.map((g) => g.name), ["a", "b"]);
  assert.equal(ui.staleDropped, 1);
});

test("exact duplicates render at most once", () => {
  const ui = initialState();
  applyMessage(ui, gesture("a", 10));
  applyMessage(ui, gesture("a", 10));
  assert.equal(ui.feed.length, 1);
});

test("feed is capped at the last 100 events", () => {
  const ui = initialState();
  for (let i = 0; i < 250; i++) applyMessage(ui, gesture("g" + i, i));
  assert.equal(ui.feed.length, FEED_LIMIT);
  assert.equal(ui.feed[0].name, "g150");
  assert.equal(ui.feed[FEED_LIMIT - 1].name, "g249");
});

test("a 30 fps stream keeps the event queue bounded", () => {
  const queue = new BoundedQueue<ServerMessage>(256);
  // 60 seconds of 30 fps frames + cursors with nothing draining
  for (let i = 0; i < 30 * 60; i++) {
    queue.push(frame(i * 33));
    queue.push({ type: "cursor", x: i, y: i, ts: i * 33 });
  }
  assert.equal(queue.length, 256);
  assert.equal(queue.dropped, 2 * 30 * 60 - 256);
  // draining applies cleanly and leaves the queue empty
  const ui = initialState();
  for (const msg of queue.drain()) applyMessage(ui, msg);
  assert.equal(queue.length, 0);
  assert.ok(ui.frameCount > 0);
  assert.ok(ui.cursor !== null);
});

test("training restarts reset the chart series", () => {
  const ui = initialState();
  applyMessage(ui, { type: "training", epoch: 1, loss: 1.0, val_acc: 0.5 });
  applyMessage(ui, { type: "training", epoch: 2, loss: 0.5, val_acc: 0.7 });
  applyMessage(ui, { type: "training", epoch: 1, loss: 0.9, val_acc: 0.6 });
  assert.equal(ui.training.length, 1);
  assert.equal(ui.training[0].loss, 0.9);
});

test("status messages drive recording state", () => {
  const ui = initialState();
  applyMessage(ui, {
    type: "status",
    recording: { kind: "dynamic", label: "Circle", count: 2 },
  });
  assert.equal(ui.recording?.count, 2);
  applyMessage(ui, { type: "status", recording: null });
  assert.equal(ui.recording, null);
});

test("malformed payloads are rejected by the parser", () => {
  assert.equal(parseServerMessage("not json"), null);
  assert.equal(parseServerMessage('{"type": "mystery"}'), null);
  assert.equal(parseServerMessage('{"type": "frame", "landmarks": []}'), null);
  assert.equal(parseServerMessage('{"type": "cursor", "x": "NaN"}'), null);
  const ok = parseServerMessage(JSON.stringify(frame(5)));
  assert.equal(ok?.type, "frame");
});
