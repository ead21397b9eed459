// Wire types for the daemon's control plane (HTTP JSON + WS events).

export type Handedness = "L" | "R";

export interface FrameMessage {
  type: "frame";
  landmarks: [number, number, number][];
  handedness: Handedness;
  signal: boolean;
  ts: number;
}

export interface CursorMessage {
  type: "cursor";
  x: number;
  y: number;
  ts: number;
}

export interface GestureMessage {
  type: "gesture";
  name: string;
  kind: "static" | "dynamic";
  confidence: number;
  ts: number;
  frames?: number;
}

export interface TrainingMessage {
  type: "training";
  epoch: number;
  loss: number;
  val_acc: number | null;
}

export interface StatusMessage {
  type: "status";
  recording?: RecordingState | null;
  recorded?: { kind: string; label: string; count: number };
  signal_override?: boolean;
  retrained?: string;
  labels?: string[];
  val_accuracy?: number;
}

export type ServerMessage =
  | FrameMessage
  | CursorMessage
  | GestureMessage
  | TrainingMessage
  | StatusMessage;

export interface RecordingState {
  kind: "static" | "dynamic";
  label: string;
  count: number;
}

/** Gesture name -> [action type, target], the daemon's config document. */
export type MappingConfig = Record<string, [string, string]>;

export interface LabelSets {
  static: string[];
  dynamic: string[];
}

export const ACTION_TYPES = ["py", "sh"] as const;

export const BUILTIN_ACTIONS = [
  "no_func",
  "take_screenshot",
  "mouse_left_click",
  "mouse_right_click",
  "mouse_double_click",
  "scroll_up",
  "scroll_down",
  "key_escape",
] as const;

/** Parse one WS payload; returns null for anything malformed. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const msg = obj as Record<string, unknown>;
  switch (msg.type) {
    case "frame":
      if (!Array.isArray(msg.landmarks) || msg.landmarks.length !== 21) return null;
      return msg as unknown as FrameMessage;
    case "cursor":
      if (typeof msg.x !== "number" || typeof msg.y !== "number") return null;
      return msg as unknown as CursorMessage;
    case "gesture":
      if (typeof msg.name !== "string" || typeof msg.ts !== "number") return null;
      return msg as unknown as GestureMessage;
    case "training":
      if (typeof msg.epoch !== "number") return null;
      return msg as unknown as TrainingMessage;
    case "status":
      return msg as unknown as StatusMessage;
    default:
      return null;
  }
}
