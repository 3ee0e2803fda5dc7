/** View-model for a live session.
 *
 * Holds exactly what the server last said: the latest snapshot, applied
 * from command responses and stream events in sequence order.  Nothing
 * here evaluates anything; with the network gone the view freezes
 * consistent, and replaying events from any sequence number reconverges
 * on the same state (snapshotHash equality).
 */
import type { FrameJson, SessionEvent, SessionStatus, StateSnapshot } from "./types.js";
import { snapshotHash } from "./types.js";

export interface GoalBadge {
  frame: number; // index into snapshot.frames, 0 = outermost
  wire: string;
  goalId: string;
  text: string;
  selected: boolean;
  paused: boolean;
}

export interface ControlState {
  enabled: boolean;
  reason: string | null; // tooltip for a disabled control
}

export class SessionView {
  snapshot: StateSnapshot | null = null;
  seq = 0;

  applySnapshot(snap: StateSnapshot): void {
    if (snap.seq !== undefined && snap.seq < this.seq) return; // stale
    this.snapshot = snap;
    if (snap.seq !== undefined) this.seq = snap.seq;
  }

  applyEvent(ev: SessionEvent): void {
    if (ev.seq <= this.seq && this.snapshot !== null) return; // replayed duplicate
    this.snapshot = ev.state;
    this.seq = ev.seq;
  }

  status(): SessionStatus | null {
    return this.snapshot?.status ?? null;
  }

  /** Stable digest of the server state, ignoring the delivery counter. */
  hash(): string {
    if (!this.snapshot) return "";
    const { seq: _seq, ...rest } = this.snapshot;
    return snapshotHash(rest);
  }

  currentFrame(): FrameJson | null {
    const frames = this.snapshot?.frames ?? [];
    return frames.length ? frames[frames.length - 1] : null;
  }

  goalBadges(): GoalBadge[] {
    const out: GoalBadge[] = [];
    const snap = this.snapshot;
    if (!snap) return out;
    snap.frames.forEach((frame, i) => {
      for (const w of frame.wires) {
        for (const g of w.goals) {
          out.push({
            frame: i,
            wire: w.id,
            goalId: g.id,
            text: g.text,
            selected: snap.selected_goal === g.id,
            paused: snap.paused_goal === g.id,
          });
        }
      }
    });
    return out;
  }

  /** Wires of the current frame whose destination is a breakpoint node. */
  breakpointWires(): string[] {
    const frame = this.currentFrame();
    if (!frame) return [];
    const stops = new Set(
      Object.entries(frame.graph_def.nodes)
        .filter(([, n]) => n.k === "breakpoint")
        .map(([id]) => id),
    );
    return frame.graph_def.wires.filter((w) => "node" in w.dst && stops.has(w.dst.node)).map((w) => w.id);
  }

  banner(): { status: SessionStatus | "idle"; detail: string } {
    const snap = this.snapshot;
    if (!snap) return { status: "idle", detail: "no session" };
    if (snap.status === "complete") {
      const n = snap.results.length;
      return { status: "complete", detail: n === 0 ? "all goals discharged" : `${n} result goal${n === 1 ? "" : "s"}` };
    }
    if (snap.status === "failed" && snap.failure) {
      const f = snap.failure;
      return { status: "failed", detail: `at node '${f.node}' in graph '${f.graph}' on goal '${f.goal}': ${f.reason}` };
    }
    if (snap.status === "paused") {
      return { status: "paused", detail: `breakpoint before goal '${snap.paused_goal ?? "?"}' moves` };
    }
    return { status: snap.status, detail: `${snap.steps_used} steps, ${snap.backtracks_used} backtracks` };
  }

  /** Client-side mirror of command preconditions, for disabled-button
   * affordances only; the server still answers 409 when it disagrees.
   *
   * Into is definitely impossible when no occupied wire of the current
   * frame ends at a nested node; with several occupied wires the next
   * pick is the server's, so the button stays enabled and a 409 becomes
   * a toast.
   */
  controls(): Record<string, ControlState> {
    const snap = this.snapshot;
    const live = snap !== null && (snap.status === "running" || snap.status === "paused");
    const done = snap === null ? "no session" : "evaluation finished";
    const base: ControlState = live ? { enabled: true, reason: null } : { enabled: false, reason: done };
    const out: Record<string, ControlState> = {
      step: { ...base },
      step_into: { ...base },
      step_over: { ...base },
      finish_node: { ...base },
      finish: { ...base },
      run_to_breakpoint: { ...base },
      backtrack: snap === null ? { ...base } : { enabled: snap.choice_depth > 0, reason: snap.choice_depth > 0 ? null : "nothing to backtrack" },
    };
    if (live && snap) {
      const frame = this.currentFrame()!;
      const nestedDsts = new Set(
        Object.entries(frame.graph_def.nodes)
          .filter(([, n]) => n.k === "nested")
          .map(([id]) => id),
      );
      const occupiedNested = frame.wires.some((w) => {
        if (w.goals.length === 0) return false;
        const def = frame.graph_def.wires.find((d) => d.id === w.id);
        return def !== undefined && "node" in def.dst && nestedDsts.has(def.dst.node);
      });
      if (!occupiedNested) {
        out.step_into = { enabled: false, reason: "no goal is at a nested node" };
      }
      if (frame.return_node === null) {
        out.finish_node = { enabled: false, reason: "not inside a nested node" };
      }
    }
    return out;
  }
}
