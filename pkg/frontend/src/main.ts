import { ApiClient } from "./api.js";
import { drawTrainingChart } from "./chart.js";
import { MappingEditor } from "./mapping.js";
import { drawCursor, drawSkeleton } from "./skeleton.js";
import { applyMessage, initialState, type UiState } from "./state.js";
import { BUILTIN_ACTIONS, type LabelSets } from "./types.js";
import { connectEvents } from "./ws.js";

const SCREEN = { w: 1920, h: 1080 }; // cursor preview scale

const api = new ApiClient("");
const ui: UiState = initialState();
const editor = new MappingEditor();
let labels: LabelSets = { static: [], dynamic: [] };

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

// ── live view ─────────────────────────────────────────────────────────

const skeletonCanvas = $<HTMLCanvasElement>("skeleton");
const chartCanvas = $<HTMLCanvasElement>("chart");

const live = connectEvents(
  (location.protocol === "https:" ? "wss://" : "ws://") + location.host + "/events",
  {
    onStatusChange: (s) => {
      ui.connection = s;
      $("conn").textContent = s;
      $("conn").className = "badge " + s;
    },
    onReconnect: () => void resync(true),
  },
);

function renderLoop(): void {
  for (const msg of live.queue.drain()) applyMessage(ui, msg);
  const sctx = skeletonCanvas.getContext("2d");
  if (sctx) {
    drawSkeleton(sctx, ui.latestFrame, skeletonCanvas.width, skeletonCanvas.height);
    drawCursor(sctx, ui.cursor, SCREEN, skeletonCanvas.width, skeletonCanvas.height);
  }
  const cctx = chartCanvas.getContext("2d");
  if (cctx) drawTrainingChart(cctx, ui.training, chartCanvas.width, chartCanvas.height);
  renderFeed();
  renderRecording();
  $("counters").textContent =
    `frames ${ui.frameCount} · parse errors ${live.malformed() + ui.errorCount}` +
    ` · dropped ${live.queue.dropped}`;
  requestAnimationFrame(renderLoop);
}

let feedRendered = 0;
function renderFeed(): void {
  if (ui.feed.length === feedRendered && feedRendered > 0) return;
  const list = $<HTMLUListElement>("feed");
  list.replaceChildren(
    ...ui.feed
      .slice()
      .reverse()
      .map((g) => {
        const li = document.createElement("li");
        li.textContent =
          `${g.name} (${g.kind}, ${(g.confidence * 100).toFixed(0)}%` +
          (g.frames && g.frames > 1 ? `, ${g.frames} frames` : "") +
          `) @ ${g.ts}`;
        return li;
      }),
  );
  feedRendered = ui.feed.length;
}

// ── signal toggle (stands in for the producer's held key) ─────────────

let signalHeld = false;
async function setSignal(on: boolean): Promise<void> {
  if (signalHeld === on) return;
  signalHeld = on;
  $("signal-state").textContent = on ? "ON" : "off";
  try {
    await api.setSignal(on);
  } catch {
    $("signal-state").textContent = "error";
  }
}

window.addEventListener("keydown", (ev) => {
  if (ev.code === "Space" && !isTyping(ev)) {
    ev.preventDefault();
    void setSignal(true);
  }
});
window.addEventListener("keyup", (ev) => {
  if (ev.code === "Space") void setSignal(false);
});

function isTyping(ev: KeyboardEvent): boolean {
  const t = ev.target as HTMLElement | null;
  return !!t && (t.tagName === "INPUT" || t.tagName === "SELECT");
}

// ── mapping editor ────────────────────────────────────────────────────

function renderMapping(): void {
  const table = $<HTMLTableSectionElement>("mapping-rows");
  table.replaceChildren();
  for (const [gesture, [type, target]] of Object.entries(editor.entries)) {
    const tr = document.createElement("tr");

    const nameTd = document.createElement("td");
    nameTd.textContent = gesture;
    tr.appendChild(nameTd);

    const typeTd = document.createElement("td");
    const typeSel = document.createElement("select");
    for (const value of ["py", "sh"]) {
      const opt = document.createElement("option");
      opt.value = value;
      opt.textContent = value;
      opt.selected = value === type;
      typeSel.appendChild(opt);
    }
    typeSel.onchange = () => {
      editor.set(gesture, typeSel.value, typeSel.value === "py" ? "no_func" : "");
      renderMapping();
    };
    typeTd.appendChild(typeSel);
    tr.appendChild(typeTd);

    const targetTd = document.createElement("td");
    if (type === "py") {
      const sel = document.createElement("select");
      for (const name of BUILTIN_ACTIONS) {
        const opt = document.createElement("option");
        opt.value = name;
        opt.textContent = name;
        opt.selected = name === target;
        sel.appendChild(opt);
      }
      sel.onchange = () => {
        editor.set(gesture, "py", sel.value);
        renderMapping();
      };
      targetTd.appendChild(sel);
    } else {
      const input = document.createElement("input");
      input.value = target;
      input.placeholder = "shell command";
      input.onchange = () => {
        editor.set(gesture, "sh", input.value);
        renderMapping();
      };
      targetTd.appendChild(input);
    }
    tr.appendChild(targetTd);

    const rmTd = document.createElement("td");
    const rm = document.createElement("button");
    rm.textContent = "✕";
    rm.onclick = () => {
      editor.remove(gesture);
      renderMapping();
    };
    rmTd.appendChild(rm);
    tr.appendChild(rmTd);
    table.appendChild(tr);
  }
  $("dirty").textContent = editor.dirty ? "unsaved changes" : "";
  $("mapping-error").textContent = editor.lastError ?? "";
}

$("add-row").onclick = () => {
  const name = $<HTMLInputElement>("new-gesture").value.trim();
  if (!name) return;
  editor.set(name, "py", "no_func");
  $<HTMLInputElement>("new-gesture").value = "";
  renderMapping();
};

$("save-mapping").onclick = async () => {
  const problems = editor.validate();
  if (problems.length > 0) {
    $("mapping-error").textContent = problems.join("; ");
    return;
  }
  await editor.save(api);
  renderMapping();
};

$("cancel-mapping").onclick = () => {
  editor.cancel();
  renderMapping();
};

// ── recording and retraining ──────────────────────────────────────────

function renderRecording(): void {
  const rec = ui.recording;
  $("rec-state").textContent = rec
    ? `recording ${rec.kind} "${rec.label}": ${rec.count}`
    : "idle";
  $<HTMLButtonElement>("rec-start").disabled =
    rec !== null || $<HTMLInputElement>("rec-label").value.trim() === "";
  $<HTMLButtonElement>("rec-stop").disabled = rec === null;
}

$<HTMLInputElement>("rec-label").oninput = renderRecording;

$("rec-start").onclick = async () => {
  const kind = $<HTMLSelectElement>("rec-kind").value as "static" | "dynamic";
  const label = $<HTMLInputElement>("rec-label").value.trim();
  try {
    await api.recordStart(kind, label);
  } catch (err) {
    $("rec-error").textContent = String(err);
  }
};

$("rec-stop").onclick = async () => {
  try {
    const result = await api.recordStop();
    $("rec-error").textContent = `stored ${result.count} ${result.kind} sample(s)`;
  } catch (err) {
    $("rec-error").textContent = String(err);
  }
};

$("retrain").onclick = async () => {
  const kind = $<HTMLSelectElement>("rec-kind").value as "static" | "dynamic";
  $("rec-error").textContent = `retraining ${kind}...`;
  try {
    const result = await api.retrain(kind);
    $("rec-error").textContent = `retrained: ${result.labels.join(", ")}`;
    await refreshLabels();
  } catch (err) {
    $("rec-error").textContent = String(err);
  }
};

// ── sync with the daemon ──────────────────────────────────────────────

async function refreshLabels(): Promise<void> {
  labels = await api.getLabels();
  $("labels-static").textContent = labels.static.join(", ");
  $("labels-dynamic").textContent = labels.dynamic.join(", ") || "(none)";
}

async function resync(afterReconnect: boolean): Promise<void> {
  if (afterReconnect && editor.dirty) {
    const keep = window.confirm(
      "Reconnected. Keep your unsaved mapping edits? (Cancel reloads the server's table.)",
    );
    if (keep) {
      await refreshLabels();
      return;
    }
  }
  editor.load(await api.getConfig());
  renderMapping();
  await refreshLabels();
}

void resync(false).then(() => requestAnimationFrame(renderLoop));
