/** Typed client for the session server.  The studio talks to nothing else. */
import type { CommandName, Diagnostic, DocumentJson, SessionEvent, StateSnapshot } from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  /** Violated precondition name on 409s (e.g. "NotAtNestedNode"). */
  readonly precondition: string | null;
  readonly diagnostics: Diagnostic[];

  constructor(status: number, message: string, precondition: string | null = null, diagnostics: Diagnostic[] = []) {
    super(message);
    this.status = status;
    this.precondition = precondition;
    this.diagnostics = diagnostics;
  }
}

async function fail(res: Response): Promise<never> {
  let detail = res.statusText;
  let precondition: string | null = null;
  let diagnostics: Diagnostic[] = [];
  try {
    const body = (await res.json()) as Record<string, unknown>;
    if (typeof body.detail === "string") detail = body.detail;
    if (typeof body.precondition === "string") precondition = body.precondition;
    if (Array.isArray(body.diagnostics)) diagnostics = body.diagnostics as Diagnostic[];
    // fastapi validation errors arrive as a list under detail
    if (Array.isArray(body.detail)) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(res.status, detail, precondition, diagnostics);
}

export interface CreateSessionRequest {
  graph: string | DocumentJson;
  goals: string[];
  policy?: string;
  limits?: { max_steps?: number; max_choice_depth?: number };
}

export interface EventStreamOptions {
  lastEventId?: number;
  /** false: return the backlog and close (the server ends the stream). */
  follow?: boolean;
  signal?: AbortSignal;
  onEvent: (ev: SessionEvent) => void;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async health(): Promise<boolean> {
    try {
      const res = await fetch(this.url("/health"));
      return res.ok;
    } catch {
      return false;
    }
  }

  async listGraphs(): Promise<string[]> {
    const res = await fetch(this.url("/graphs"));
    if (!res.ok) await fail(res);
    return ((await res.json()) as { graphs: string[] }).graphs;
  }

  async getGraph(name: string): Promise<DocumentJson> {
    const res = await fetch(this.url(`/graphs/${name}`));
    if (!res.ok) await fail(res);
    return (await res.json()) as DocumentJson;
  }

  async putGraph(name: string, doc: DocumentJson): Promise<void> {
    const res = await fetch(this.url(`/graphs/${name}`), {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    });
    if (!res.ok) await fail(res);
  }

  async createSession(req: CreateSessionRequest): Promise<{ session_id: string; state: StateSnapshot }> {
    const res = await fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    if (!res.ok) await fail(res);
    return (await res.json()) as { session_id: string; state: StateSnapshot };
  }

  async getState(sid: string): Promise<StateSnapshot> {
    const res = await fetch(this.url(`/sessions/${sid}/state`));
    if (!res.ok) await fail(res);
    return (await res.json()) as StateSnapshot;
  }

  async getTrace(sid: string): Promise<string> {
    const res = await fetch(this.url(`/sessions/${sid}/trace`));
    if (!res.ok) await fail(res);
    return await res.text();
  }

  async command(sid: string, cmd: CommandName, args: Record<string, unknown> = {}): Promise<StateSnapshot> {
    const res = await fetch(this.url(`/sessions/${sid}/command`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ cmd, args }),
    });
    if (!res.ok) await fail(res);
    return (await res.json()) as StateSnapshot;
  }

  /** Read the session event stream, resolving when it ends or is aborted.
   *
   * Parses SSE by hand over a fetch stream so the same code runs in the
   * browser and under node: buffer bytes, split into lines, and fire on
   * each blank-line event boundary.  `id:` lines carry the sequence
   * number; replay starts after `lastEventId` when given.
   */
  async events(sid: string, opts: EventStreamOptions): Promise<void> {
    const follow = opts.follow !== false;
    const headers: Record<string, string> = { accept: "text/event-stream" };
    if (opts.lastEventId !== undefined) headers["last-event-id"] = String(opts.lastEventId);
    const res = await fetch(this.url(`/sessions/${sid}/events` + (follow ? "" : "?follow=false")), {
      headers,
      signal: opts.signal,
    });
    if (!res.ok || !res.body) await fail(res);

    const reader = res.body!.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let data = "";
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        buffer += decoder.decode(value, { stream: true });
        const lines = buffer.split("\n");
        buffer = lines.pop()!; // partial last line stays buffered
        for (const line of lines) {
          if (line.startsWith("data:")) {
            data = line.slice(5).trim();
          } else if (line.trim() === "") {
            if (data) opts.onEvent(JSON.parse(data) as SessionEvent);
            data = "";
          }
          // `id:` lines duplicate the seq already inside the payload
        }
      }
    } catch (e) {
      if (!(e instanceof DOMException && e.name === "AbortError")) throw e;
    }
  }

  /** Collect the current backlog without following. */
  async backlog(sid: string, lastEventId?: number): Promise<SessionEvent[]> {
    const out: SessionEvent[] = [];
    await this.events(sid, { lastEventId, follow: false, onEvent: (ev) => out.push(ev) });
    return out;
  }
}
