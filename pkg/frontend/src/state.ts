import type {
  FrameMessage,
  GestureMessage,
  RecordingState,
  ServerMessage,
  TrainingMessage,
} from "./types.js";

export const FEED_LIMIT = 100;

export interface UiState {
  connection: "connecting" | "open" | "closed";
  latestFrame: FrameMessage | null;
  frameCount: number;
  feed: GestureMessage[]; // newest last, timestamp-ordered, capped
  cursor: { x: number; y: number } | null;
  recording: RecordingState | null;
  training: TrainingMessage[];
  signalOverride: boolean;
  errorCount: number; // malformed WS payloads
  staleDropped: number; // events older than the feed tail
}

export function initialState(): UiState {
  return {
    connection: "connecting",
    latestFrame: null,
    frameCount: 0,
    feed: [],
    cursor: null,
    recording: null,
    training: [],
    signalOverride: false,
    errorCount: 0,
    staleDropped: 0,
  };
}

/** Fold one server message into the state. Pure view logic: the UI never
 * re-derives features or classifications, it renders what the daemon
 * said. Returns the same object, mutated (call sites own batching). */
export function applyMessage(ui: UiState, msg: ServerMessage): UiState {
  switch (msg.type) {
    case "frame":
      ui.latestFrame = msg;
      ui.frameCount++;
      break;
    case "cursor":
      ui.cursor = { x: msg.x, y: msg.y };
      break;
    case "gesture": {
      const last = ui.feed[ui.feed.length - 1];
      if (last && msg.ts < last.ts) {
        // the feed never reorders; a straggler is dropped, not inserted
        ui.staleDropped++;
        break;
      }
      if (
        last &&
        last.ts === msg.ts &&
        last.name === msg.name &&
        last.kind === msg.kind
      ) {
        break; // exact duplicate: render at most once
      }
      ui.feed.push(msg);
      if (ui.feed.length > FEED_LIMIT) ui.feed.splice(0, ui.feed.length - FEED_LIMIT);
      break;
    }
    case "training":
      if (msg.epoch === 1) ui.training = [];
      ui.training.push(msg);
      break;
    case "status":
      if (msg.recording !== undefined) ui.recording = msg.recording;
      if (msg.signal_override !== undefined) ui.signalOverride = msg.signal_override;
      break;
  }
  return ui;
}

export function noteMalformed(ui: UiState): void {
  ui.errorCount++;
}
