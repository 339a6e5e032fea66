/**
 * Server-sent events over fetch.
 *
 * The native EventSource cannot change its query string between
 * reconnects, and the resume cursor lives in ?since=. Reading the
 * stream by hand also lets the same code run in tests without a
 * browser. Frames arrive as "id: N\nevent: KIND\ndata: JSON\n\n" and
 * the parser must survive chunk boundaries landing anywhere.
 */

import type { FetchLike, JournalEntry } from "./api";

export interface SseFrame {
  id?: string;
  event?: string;
  data: string;
}

/** Incremental parser; push() returns the frames completed so far. */
export class SseParser {
  private buffer = "";

  push(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const frames: SseFrame[] = [];
    for (;;) {
      const match = /\r?\n\r?\n/.exec(this.buffer);
      if (!match) break;
      const block = this.buffer.slice(0, match.index);
      this.buffer = this.buffer.slice(match.index + match[0].length);
      const frame = parseBlock(block);
      if (frame) frames.push(frame);
    }
    return frames;
  }
}

function parseBlock(block: string): SseFrame | null {
  const frame: SseFrame = { data: "" };
  const dataLines: string[] = [];
  for (const line of block.split(/\r?\n/)) {
    if (!line || line.startsWith(":")) continue;
    const colon = line.indexOf(":");
    const field = colon < 0 ? line : line.slice(0, colon);
    let value = colon < 0 ? "" : line.slice(colon + 1);
    if (value.startsWith(" ")) value = value.slice(1);
    if (field === "id") frame.id = value;
    else if (field === "event") frame.event = value;
    else if (field === "data") dataLines.push(value);
  }
  if (dataLines.length === 0 && frame.id === undefined && frame.event === undefined) {
    return null;
  }
  frame.data = dataLines.join("\n");
  return frame;
}

export type FeedStatus = "connecting" | "live" | "retrying" | "stopped";

export interface EventFeedOptions {
  since?: number;
  fetchFn?: FetchLike;
  retryMs?: number;
  onEntry: (entry: JournalEntry) => void;
  onStatus?: (status: FeedStatus) => void;
}

/**
 * Persistent journal subscription. Each received entry bumps the
 * cursor to seq + 1, and every (re)connect asks for ?since=cursor, so
 * a dropped connection resumes without duplicates or gaps.
 */
export class EventFeed {
  cursor: number;
  status: FeedStatus = "connecting";

  private readonly fetchFn: FetchLike;
  private readonly retryMs: number;
  private readonly onEntry: (entry: JournalEntry) => void;
  private readonly onStatus?: (status: FeedStatus) => void;
  private controller: AbortController | null = null;
  private stopped = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    readonly baseUrl: string,
    options: EventFeedOptions,
  ) {
    this.cursor = options.since ?? 0;
    this.fetchFn =
      options.fetchFn ?? ((input, init) => globalThis.fetch(input, init));
    this.retryMs = options.retryMs ?? 2000;
    this.onEntry = options.onEntry;
    this.onStatus = options.onStatus;
  }

  start(): void {
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.controller?.abort();
    this.setStatus("stopped");
  }

  /** Drop the current connection; the loop reconnects at the cursor. */
  interrupt(): void {
    this.controller?.abort();
  }

  private setStatus(status: FeedStatus): void {
    this.status = status;
    this.onStatus?.(status);
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      this.controller = new AbortController();
      try {
        await this.readOnce(this.controller.signal);
      } catch {
        // aborted or network failure, either way fall through to retry
      }
      if (this.stopped) return;
      this.setStatus("retrying");
      await new Promise<void>((resolve) => {
        this.timer = setTimeout(resolve, this.retryMs);
      });
    }
  }

  private async readOnce(signal: AbortSignal): Promise<void> {
    const url = `${this.baseUrl}/events/stream?since=${this.cursor}`;
    const response = await this.fetchFn(url, { signal });
    if (!response.ok || !response.body) {
      throw new Error(`stream rejected: ${response.status}`);
    }
    this.setStatus("live");
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
        this.handleFrame(frame);
      }
    }
  }

  private handleFrame(frame: SseFrame): void {
    if (!frame.data) return;
    let entry: JournalEntry;
    try {
      entry = JSON.parse(frame.data) as JournalEntry;
    } catch {
      return; // not ours; ignore rather than kill the stream
    }
    if (typeof entry.seq !== "number") return;
    if (entry.seq < this.cursor) return; // replayed, already delivered
    this.cursor = entry.seq + 1;
    this.onEntry(entry);
  }
}
