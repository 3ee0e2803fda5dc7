/** JSON shapes shared with the session server. */

export type NodeKind = "atomic" | "nested" | "identity" | "breakpoint";

export interface NodeJson {
  k: NodeKind;
  tactic?: string; // atomic only
  graph?: string; // nested only
}

export type EndJson = { node: string } | { in: number } | { out: number };

export interface WireJson {
  id: string;
  src: EndJson;
  dst: EndJson;
  gt: string;
}

export interface GraphJson {
  n_inputs: number;
  n_outputs: number;
  nodes: Record<string, NodeJson>;
  wires: WireJson[];
}

export interface DocumentJson {
  version: number;
  main: string;
  graphs: Record<string, GraphJson>;
  ui?: unknown;
}

export interface Diagnostic {
  code: string; // E001..E005, W001
  graph: string;
  loc: string; // node id, wire id, or "" for graph-level findings
  message: string;
}

export interface GoalJson {
  id: string;
  text: string;
}

export interface WireStateJson {
  id: string;
  goals: GoalJson[];
}

export interface FrameJson {
  graph: string;
  return_node: string | null;
  wires: WireStateJson[];
  graph_def: GraphJson;
}

export interface FailureJson {
  graph: string;
  node: string;
  goal_id: string;
  goal: string;
  reason: string;
  limit: boolean;
}

export type SessionStatus = "running" | "paused" | "complete" | "failed";

export interface StateSnapshot {
  status: SessionStatus;
  frames: FrameJson[];
  selected_goal: string | null;
  paused_goal: string | null;
  choice_depth: number;
  results: GoalJson[];
  failure: FailureJson | null;
  steps_used: number;
  backtracks_used: number;
  seq?: number;
}

export interface SessionEvent {
  seq: number;
  kind: string;
  state: StateSnapshot;
}

export type CommandName =
  | "step"
  | "step_into"
  | "step_over"
  | "finish_node"
  | "finish"
  | "run_to_breakpoint"
  | "backtrack"
  | "select_goal"
  | "toggle_breakpoint";

/** Tactics registered in the engine; used only for editor hints (E001 preview).
 *  The server remains the authority via lint-on-save. */
export const BUILTIN_TACTICS: readonly string[] = [
  "all_intro",
  "assumption",
  "conj_elim",
  "conj_intro",
  "disj_elim",
  "disj_intro",
  "exists_elim",
  "exists_intro",
  "false_elim",
  "imp_intro",
  "true_intro",
];

/** Deep structural equality over JSON values; object key order ignored. */
export function jsonEqual(a: unknown, b: unknown): boolean {
  if (a === b) return true;
  if (Array.isArray(a) && Array.isArray(b)) {
    return a.length === b.length && a.every((x, i) => jsonEqual(x, b[i]));
  }
  if (a && b && typeof a === "object" && typeof b === "object" && !Array.isArray(a) && !Array.isArray(b)) {
    const ka = Object.keys(a as object).sort();
    const kb = Object.keys(b as object).sort();
    if (!jsonEqual(ka, kb)) return false;
    return ka.every((k) => jsonEqual((a as Record<string, unknown>)[k], (b as Record<string, unknown>)[k]));
  }
  return false;
}

/** JSON text with recursively sorted object keys: a stable basis for hashing. */
export function stableStringify(v: unknown): string {
  if (Array.isArray(v)) return "[" + v.map(stableStringify).join(",") + "]";
  if (v && typeof v === "object") {
    const keys = Object.keys(v as object).sort();
    return "{" + keys.map((k) => JSON.stringify(k) + ":" + stableStringify((v as Record<string, unknown>)[k])).join(",") + "}";
  }
  return JSON.stringify(v);
}

/** 64-bit FNV-1a over the stable encoding, as 16 hex digits. */
export function snapshotHash(v: unknown): string {
  const text = stableStringify(v);
  let h = 0xcbf29ce484222325n;
  const prime = 0x100000001b3n;
  const mask = 0xffffffffffffffffn;
  for (let i = 0; i < text.length; i++) {
    h ^= BigInt(text.charCodeAt(i) & 0xff);
    h = (h * prime) & mask;
    // charCodeAt can exceed one byte; fold the high byte in as well
    const hi = text.charCodeAt(i) >> 8;
    if (hi) {
      h ^= BigInt(hi);
      h = (h * prime) & mask;
    }
  }
  return h.toString(16).padStart(16, "0");
}
