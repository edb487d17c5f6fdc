// NDJSON stream reader over fetch with auto-reconnect and staleness watch.
// Works on the browser and node 20 alike (web streams API).

import type { StreamEvent } from "./types.js";

export const STALE_AFTER_MS = 5000;
export const RECONNECT_DELAY_MS = 1000;

export function parseLines(buffer: string, chunk: string): { events: StreamEvent[]; rest: string } {
  const text = buffer + chunk;
  const parts = text.split("\n");
  const rest = parts.pop() ?? "";
  const events: StreamEvent[] = [];
  for (const line of parts) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    try {
      events.push(JSON.parse(trimmed));
    } catch {
      // a torn line mid-reconnect is dropped, never fatal
    }
  }
  return { events, rest };
}

export interface StreamHandlers {
  onEvent: (event: StreamEvent) => void;
  onStale?: (stale: boolean) => void;
  onStatus?: (status: "connecting" | "open" | "closed") => void;
}

export class NdjsonStream {
  private url: string;
  private token: string;
  private handlers: StreamHandlers;
  private controller: AbortController | null = null;
  private staleTimer: ReturnType<typeof setInterval> | null = null;
  private lastLineAt = 0;
  private stale = false;
  private stopped = false;

  constructor(url: string, token: string, handlers: StreamHandlers) {
    this.url = url;
    this.token = token;
    this.handlers = handlers;
  }

  start(): void {
    this.stopped = false;
    this.lastLineAt = Date.now();
    this.staleTimer = setInterval(() => this.checkStale(), 1000);
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
    if (this.staleTimer) clearInterval(this.staleTimer);
    this.handlers.onStatus?.("closed");
  }

  private checkStale(): void {
    const nowStale = Date.now() - this.lastLineAt > STALE_AFTER_MS;
    if (nowStale !== this.stale) {
      this.stale = nowStale;
      this.handlers.onStale?.(nowStale);
    }
  }

  private markAlive(): void {
    this.lastLineAt = Date.now();
    if (this.stale) {
      this.stale = false;
      this.handlers.onStale?.(false);
    }
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      this.controller = new AbortController();
      this.handlers.onStatus?.("connecting");
      try {
        const response = await fetch(this.url, {
          headers: { Authorization: `Bearer ${this.token}` },
          signal: this.controller.signal,
        });
        if (!response.ok || !response.body) throw new Error(`stream HTTP ${response.status}`);
        this.handlers.onStatus?.("open");
        this.markAlive();
        const reader = response.body.pipeThrough(new TextDecoderStream()).getReader();
        let buffer = "";
        for (;;) {
          const { value, done } = await reader.read();
          if (done) break;
          const { events, rest } = parseLines(buffer, value);
          buffer = rest;
          for (const event of events) {
            this.markAlive();
            this.handlers.onEvent(event);
          }
        }
      } catch {
        // fall through to reconnect
      }
      if (this.stopped) return;
      await new Promise((resolve) => setTimeout(resolve, RECONNECT_DELAY_MS));
    }
  }
}
