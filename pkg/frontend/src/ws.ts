import { BoundedQueue } from "./queue.js";
import { parseServerMessage, type ServerMessage } from "./types.js";

export interface LiveConnection {
  queue: BoundedQueue<ServerMessage>;
  malformed(): number;
  close(): void;
}

/** Connect to the daemon's event stream.
 *
 * Messages land in a bounded drop-oldest queue that the render loop
 * drains; a slow tab can never grow memory without bound. Reconnects
 * with capped backoff; `onReconnect` lets the app re-sync config/labels
 * after a gap.
 */
export function connectEvents(
  url: string,
  opts: {
    capacity?: number;
    onStatusChange?: (status: "connecting" | "open" | "closed") => void;
    onReconnect?: () => void;
  } = {},
): LiveConnection {
  const queue = new BoundedQueue<ServerMessage>(opts.capacity ?? 256);
  let malformed = 0;
  let closed = false;
  let everOpened = false;
  let retryMs = 500;
  let ws: WebSocket | null = null;

  const open = () => {
    opts.onStatusChange?.("connecting");
    ws = new WebSocket(url);
    ws.onopen = () => {
      retryMs = 500;
      opts.onStatusChange?.("open");
      if (everOpened) opts.onReconnect?.();
      everOpened = true;
    };
    ws.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg === null) {
        malformed++; // ignored, surfaced as an error counter
        return;
      }
      queue.push(msg);
    };
    ws.onclose = () => {
      opts.onStatusChange?.("closed");
      if (!closed) {
        setTimeout(open, retryMs);
        retryMs = Math.min(retryMs * 2, 8000);
      }
    };
    ws.onerror = () => {
      // onclose handles retry
    };
  };
  open();

  return {
    queue,
    malformed: () => malformed,
    close: () => {
      closed = true;
      ws?.close();
    },
  };
}
