import type { TrainingMessage } from "./types.js";

/** Minimal loss/accuracy chart for retraining progress. */
export function drawTrainingChart(
  ctx: CanvasRenderingContext2D,
  points: TrainingMessage[],
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#101418";
  ctx.fillRect(0, 0, width, height);
  if (points.length === 0) {
    ctx.fillStyle = "#5a6570";
    ctx.font = "12px sans-serif";
    ctx.fillText("no training yet", 10, 20);
    return;
  }
  const pad = 24;
  const w = width - 2 * pad;
  const h = height - 2 * pad;
  const maxEpoch = Math.max(...points.map((p) => p.epoch), 1);
  const maxLoss = Math.max(...points.map((p) => p.loss), 1e-9);
  const x = (epoch: number) => pad + ((epoch - 1) / Math.max(maxEpoch - 1, 1)) * w;

  ctx.strokeStyle = "#6aa3f8"; // loss
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  points.forEach((p, i) => {
    const yy = pad + (1 - p.loss / maxLoss) * h;
    if (i === 0) ctx.moveTo(x(p.epoch), yy);
    else ctx.lineTo(x(p.epoch), yy);
  });
  ctx.stroke();

  const withAcc = points.filter((p) => p.val_acc !== null);
  if (withAcc.length > 0) {
    ctx.strokeStyle = "#4cc38a"; // validation accuracy in [0, 1]
    ctx.beginPath();
    withAcc.forEach((p, i) => {
      const yy = pad + (1 - (p.val_acc as number)) * h;
      if (i === 0) ctx.moveTo(x(p.epoch), yy);
      else ctx.lineTo(x(p.epoch), yy);
    });
    ctx.stroke();
  }
  ctx.fillStyle = "#9aa5b0";
  ctx.font = "11px sans-serif";
  const last = points[points.length - 1];
  const acc = last.val_acc === null ? "-" : (last.val_acc * 100).toFixed(1) + "%";
  ctx.fillText(
    `epoch ${last.epoch}/${maxEpoch}  loss ${last.loss.toFixed(4)}  val ${acc}`,
    pad,
    14,
  );
}
