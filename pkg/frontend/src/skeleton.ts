import type { FrameMessage } from "./types.js";

/** Bone edges of the 21-landmark hand, base to tip per finger chain. */
export const HAND_EDGES: [number, number][] = [
  [0, 1], [1, 2], [2, 3], [3, 4],
  [0, 5], [5, 6], [6, 7], [7, 8],
  [0, 9], [9, 10], [10, 11], [11, 12],
  [0, 13], [13, 14], [14, 15], [15, 16],
  [0, 17], [17, 18], [18, 19], [19, 20],
];

/** Draw one frame: 21 points and 20 bones in normalized coordinates
 * scaled to the canvas; z modulates point radius (closer = bigger).
 * A filled corner badge mirrors the signal flag. */
export function drawSkeleton(
  ctx: CanvasRenderingContext2D,
  frame: FrameMessage | null,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#101418";
  ctx.fillRect(0, 0, width, height);
  if (!frame) {
    ctx.fillStyle = "#5a6570";
    ctx.font = "14px sans-serif";
    ctx.fillText("waiting for frames...", 12, 24);
    return;
  }
  const px = (p: [number, number, number]): [number, number] => [
    p[0] * width,
    p[1] * height,
  ];
  ctx.strokeStyle = frame.handedness === "R" ? "#4cc38a" : "#6aa3f8";
  ctx.lineWidth = 2;
  for (const [a, b] of HAND_EDGES) {
    const [x1, y1] = px(frame.landmarks[a]);
    const [x2, y2] = px(frame.landmarks[b]);
    ctx.beginPath();
    ctx.moveTo(x1, y1);
    ctx.lineTo(x2, y2);
    ctx.stroke();
  }
  ctx.fillStyle = "#e8edf2";
  for (const p of frame.landmarks) {
    const [x, y] = px(p);
    const r = Math.max(2, Math.min(7, 4 - p[2] * 40)); // nearer -> larger
    ctx.beginPath();
    ctx.arc(x, y, r, 0, Math.PI * 2);
    ctx.fill();
  }
  // signal badge
  ctx.fillStyle = frame.signal ? "#ff5d5d" : "#3a434c";
  ctx.beginPath();
  ctx.arc(width - 16, 16, 8, 0, Math.PI * 2);
  ctx.fill();
}

/** Draw the cursor preview dot scaled from screen to canvas space. */
export function drawCursor(
  ctx: CanvasRenderingContext2D,
  cursor: { x: number; y: number } | null,
  screen: { w: number; h: number },
  width: number,
  height: number,
): void {
  if (!cursor) return;
  const x = (cursor.x / screen.w) * width;
  const y = (cursor.y / screen.h) * height;
  ctx.strokeStyle = "#ffb224";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.arc(x, y, 6, 0, Math.PI * 2);
  ctx.stroke();
  ctx.beginPath();
  ctx.moveTo(x - 9, y);
  ctx.lineTo(x + 9, y);
  ctx.moveTo(x, y - 9);
  ctx.lineTo(x, y + 9);
  ctx.stroke();
}
