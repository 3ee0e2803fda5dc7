/** Studio application: a Graph panel for drawing strategies, the stepping
 * controls, and an Information panel with the live goals — all state from
 * the session server, none computed here.
 */
import { ApiClient, ApiError } from "./api.js";
import { CanvasModel } from "./canvas.js";
import type { Point } from "./canvas.js";
import { GraphRenderer } from "./render.js";
import { SessionView } from "./session.js";
import type { Diagnostic, DocumentJson, EndJson, CommandName, NodeKind } from "./types.js";
import { BUILTIN_TACTICS } from "./types.js";
import { goalTypeProblem } from "./goaltypes.js";
import { lintErrors } from "./validate.js";

type Selection = { kind: "node" | "wire"; id: string } | null;

const COMMAND_LABELS: [CommandName, string][] = [
  ["step", "Step"],
  ["step_into", "Into"],
  ["step_over", "Over"],
  ["finish_node", "Finish node"],
  ["finish", "Finish"],
  ["run_to_breakpoint", "Run to breakpoint"],
  ["backtrack", "Backtrack"],
];

class StudioApp {
  private api: ApiClient;
  private renderer: GraphRenderer;
  private model = new CanvasModel();
  private view = new SessionView();
  private mode: "edit" | "session" = "edit";
  private graphName = "untitled";
  private currentGraph: string;
  private selection: Selection = null;
  private pendingAdd: { kind: NodeKind; arg: string | null } | null = null;
  private sessionId: string | null = null;
  private sse: AbortController | null = null;
  private diagnostics: Diagnostic[] = [];

  constructor(private root: HTMLElement, baseUrl: string) {
    this.api = new ApiClient(baseUrl);
    this.currentGraph = this.model.main;
    this.root.innerHTML = this.shell();
    this.renderer = new GraphRenderer(this.root.querySelector("svg")!);
    this.wireToolbar();
    void this.refreshGraphList();
    this.redraw();
  }

  // --- layout ------------------------------------------------------------------

  private shell(): string {
    return `
      <div class="studio">
        <aside class="panel side">
          <h2>Graphs</h2>
          <ul id="graph-list"></ul>
          <div class="row"><input id="graph-name" placeholder="name"><button id="save-btn">Save</button></div>
          <h2>Draw</h2>
          <div id="palette" class="palette">
            <button data-kind="atomic">tactic</button>
            <button data-kind="nested">nested</button>
            <button data-kind="identity">identity</button>
            <button data-kind="breakpoint">breakpoint</button>
          </div>
          <p class="hint">Click the canvas to place. Shift-drag between nodes or ports to wire them. Double-click to edit; press Delete to remove.</p>
          <h2>Problems</h2>
          <ul id="diagnostics"></ul>
        </aside>
        <main class="panel canvas-panel">
          <div id="banner" class="banner idle">editing</div>
          <svg id="canvas" width="700" height="420"></svg>
          <div class="controls">
            <input id="goal-input" placeholder="|- p -> p" size="28">
            <button id="start-btn">Start session</button>
            <button id="stop-btn">Back to editor</button>
            <span id="buttons"></span>
          </div>
        </main>
        <aside class="panel side">
          <h2>Information</h2>
          <div id="info"></div>
          <h2>Goals</h2>
          <ul id="goals"></ul>
          <h2>Results</h2>
          <ul id="results"></ul>
        </aside>
      </div>
      <div id="toasts"></div>`;
  }

  private wireToolbar(): void {
    const palette = this.root.querySelector<HTMLElement>("#palette")!;
    palette.querySelectorAll("button").forEach((b) =>
      b.addEventListener("click", () => {
        const kind = b.dataset.kind as NodeKind;
        let arg: string | null = null;
        if (kind === "atomic") {
          arg = prompt("tactic name", BUILTIN_TACTICS[3]) ?? "";
          if (!arg) return;
        }
        if (kind === "nested") {
          arg = prompt("subgraph name") ?? "";
          if (!arg) return;
        }
        this.pendingAdd = { kind, arg };
      }),
    );
    this.root.querySelector("#save-btn")!.addEventListener("click", () => void this.save());
    this.root.querySelector("#start-btn")!.addEventListener("click", () => void this.startSession());
    this.root.querySelector("#stop-btn")!.addEventListener("click", () => this.stopSession());
    const buttons = this.root.querySelector<HTMLElement>("#buttons")!;
    for (const [cmd, label] of COMMAND_LABELS) {
      const b = document.createElement("button");
      b.id = `cmd-${cmd}`;
      b.textContent = label;
      b.addEventListener("click", () => void this.send(cmd));
      buttons.appendChild(b);
    }
    document.addEventListener("keydown", (ev) => {
      if (ev.key === "Delete" && this.mode === "edit" && this.selection) {
        if (this.selection.kind === "node") this.model.deleteNode(this.currentGraph, this.selection.id);
        else this.model.deleteWire(this.currentGraph, this.selection.id);
        this.selection = null;
        this.redraw();
      }
    });
  }

  // --- editing ----------------------------------------------------------------------

  private redraw(): void {
    const editing = this.mode === "edit";
    const graph = editing ? this.model.graph(this.currentGraph) : this.view.currentFrame()?.graph_def;
    if (!graph) return;
    this.renderer.render(graph, {
      layoutNodes: editing ? (this.model.layout[this.currentGraph]?.nodes ?? {}) : {},
      badges: editing ? [] : this.view.goalBadges().filter((b) => b.frame === (this.view.snapshot?.frames.length ?? 1) - 1),
      breakpointWires: editing ? [] : this.view.breakpointWires(),
      selection: this.selection,
      editable: editing,
      handlers: {
        onCanvasClick: (at) => this.canvasClick(at),
        onNodeClick: (id) => {
          this.selection = { kind: "node", id };
          this.redraw();
        },
        onNodeDouble: (id) => this.retypeDialog(id),
        onNodeDrag: (id, to) => {
          this.model.moveNode(this.currentGraph, id, to);
          this.redraw();
        },
        onWireClick: (id) => {
          if (editing) {
            this.selection = { kind: "wire", id };
            this.redraw();
          } else {
            void this.send("toggle_breakpoint", { wire: id });
          }
        },
        onWireDouble: (id) => this.goalTypeDialog(id),
        onPortDrag: (from, to) => this.connect(from, to),
        onBadgeClick: (goalId) => void this.send("select_goal", { goal: goalId }),
      },
    });
    this.renderDiagnostics();
    this.renderInfo();
  }

  private canvasClick(at: Point): void {
    if (this.mode !== "edit") return;
    if (this.pendingAdd) {
      const { kind, arg } = this.pendingAdd;
      this.pendingAdd = null;
      const id = this.model.freshNodeId(this.currentGraph, kind === "atomic" ? "t" : kind[0]);
      if (kind === "nested" && arg && !this.model.graphs[arg]) this.model.addGraph(arg);
      this.model.addNode(this.currentGraph, id, kind, arg, at);
    } else {
      this.selection = null;
    }
    this.redraw();
  }

  private connect(from: EndJson, to: EndJson): void {
    if ("out" in from || "in" in to) {
      this.toast("wires run from inputs/nodes to nodes/outputs");
      return;
    }
    const id = this.model.freshWireId(this.currentGraph);
    this.model.addWire(this.currentGraph, id, from, to as EndJson, "any");
    this.redraw();
  }

  private retypeDialog(id: string): void {
    if (this.mode !== "edit") return;
    const node = this.model.graph(this.currentGraph).nodes[id];
    const kind = (prompt("kind: atomic | nested | identity | breakpoint", node.k) ?? "") as NodeKind;
    if (!["atomic", "nested", "identity", "breakpoint"].includes(kind)) return;
    let arg: string | null = null;
    if (kind === "atomic") arg = prompt("tactic name", node.tactic ?? "") ?? "";
    if (kind === "nested") arg = prompt("subgraph name", node.graph ?? "") ?? "";
    try {
      this.model.retypeNode(this.currentGraph, id, kind, arg);
    } catch (e) {
      this.toast(String(e));
    }
    this.redraw();
  }

  private goalTypeDialog(id: string): void {
    if (this.mode !== "edit") return;
    const w = this.model.graph(this.currentGraph).wires.find((w) => w.id === id);
    if (!w) return;
    const text = prompt("goal type", w.gt);
    if (text === null) return;
    const problem = goalTypeProblem(text);
    if (problem) {
      // inline marker: the wire stays selected and the problem lands in
      // the diagnostics list at its offset
      this.selection = { kind: "wire", id };
      this.diagnostics = [{ code: "SYNTAX", graph: this.currentGraph, loc: id, message: problem.message }];
      this.renderDiagnostics();
      return;
    }
    this.model.setWireType(this.currentGraph, id, text);
    this.diagnostics = [];
    this.redraw();
  }

  private async save(): Promise<void> {
    const name = (this.root.querySelector<HTMLInputElement>("#graph-name")!.value || this.graphName).trim();
    const check = this.model.validate();
    if (check.schema.length > 0) {
      this.toast("not savable: " + check.schema[0]);
      return;
    }
    this.diagnostics = check.diagnostics;
    this.renderDiagnostics();
    if (lintErrors(check.diagnostics).length > 0) {
      this.toast("lint errors block saving");
      return;
    }
    try {
      await this.api.putGraph(name, this.model.toDocument());
      this.graphName = name;
      this.toast(`saved '${name}'`, true);
      await this.refreshGraphList();
    } catch (e) {
      if (e instanceof ApiError) {
        this.diagnostics = e.diagnostics;
        this.renderDiagnostics();
        this.toast(`server rejected save: ${e.message}`);
      } else throw e;
    }
  }

  private async refreshGraphList(): Promise<void> {
    const ul = this.root.querySelector<HTMLElement>("#graph-list")!;
    try {
      const names = await this.api.listGraphs();
      ul.replaceChildren(
        ...names.map((n) => {
          const li = document.createElement("li");
          const a = document.createElement("a");
          a.textContent = n;
          a.href = "#";
          a.addEventListener("click", (ev) => {
            ev.preventDefault();
            void this.open(n);
          });
          li.appendChild(a);
          return li;
        }),
      );
    } catch {
      ul.replaceChildren();
    }
  }

  private async open(name: string): Promise<void> {
    const doc = await this.api.getGraph(name);
    this.model = CanvasModel.fromDocument(doc);
    this.graphName = name;
    this.currentGraph = this.model.main;
    this.root.querySelector<HTMLInputElement>("#graph-name")!.value = name;
    this.selection = null;
    this.mode = "edit";
    this.redraw();
  }

  // --- session -----------------------------------------------------------------------

  private async startSession(): Promise<void> {
    const goal = this.root.querySelector<HTMLInputElement>("#goal-input")!.value.trim();
    if (!goal) {
      this.toast("enter a goal first");
      return;
    }
    try {
      const made = await this.api.createSession({ graph: this.model.toDocument() as DocumentJson, goals: [goal] });
      this.sessionId = made.session_id;
      this.view = new SessionView();
      this.view.applySnapshot(made.state);
      this.mode = "session";
      this.selection = null;
      this.subscribe();
      this.redraw();
    } catch (e) {
      this.toast(e instanceof ApiError ? e.message : String(e));
    }
  }

  private stopSession(): void {
    this.sse?.abort();
    this.sse = null;
    this.sessionId = null;
    this.mode = "edit";
    this.redraw();
  }

  /** One SSE connection per open session; reconnect resumes after the
   *  last applied sequence number, so no update is lost or reordered. */
  private subscribe(): void {
    if (!this.sessionId) return;
    this.sse?.abort();
    this.sse = new AbortController();
    const sid = this.sessionId;
    const signal = this.sse.signal;
    const run = async () => {
      while (!signal.aborted && this.sessionId === sid) {
        try {
          await this.api.events(sid, {
            lastEventId: this.view.seq,
            signal,
            onEvent: (ev) => {
              this.view.applyEvent(ev);
              this.redraw();
            },
          });
        } catch {
          // drop into the retry sleep below
        }
        await new Promise((r) => setTimeout(r, 1000));
      }
    };
    void run();
  }

  private async send(cmd: CommandName, args: Record<string, unknown> = {}): Promise<void> {
    if (!this.sessionId) return;
    try {
      const snap = await this.api.command(this.sessionId, cmd, args);
      this.view.applySnapshot(snap);
      this.redraw();
    } catch (e) {
      if (e instanceof ApiError) {
        this.toast(e.precondition ? `${e.precondition}: ${e.message}` : e.message);
      } else {
        this.toast(String(e));
      }
    }
  }

  // --- info panel -----------------------------------------------------------------------

  private renderDiagnostics(): void {
    const ul = this.root.querySelector<HTMLElement>("#diagnostics")!;
    ul.replaceChildren(
      ...this.diagnostics.map((d) => {
        const li = document.createElement("li");
        li.className = d.code.startsWith("E") || d.code === "SYNTAX" ? "err" : "warn";
        li.textContent = `${d.code} ${d.graph}${d.loc ? "/" + d.loc : ""}: ${d.message}`;
        li.addEventListener("click", () => {
          if (d.loc) {
            const g = this.model.graphs[d.graph];
            this.selection = g && g.nodes[d.loc] ? { kind: "node", id: d.loc } : { kind: "wire", id: d.loc };
            this.redraw();
          }
        });
        return li;
      }),
    );
  }

  private renderInfo(): void {
    const banner = this.root.querySelector<HTMLElement>("#banner")!;
    const info = this.root.querySelector<HTMLElement>("#info")!;
    const goals = this.root.querySelector<HTMLElement>("#goals")!;
    const results = this.root.querySelector<HTMLElement>("#results")!;

    if (this.mode === "edit") {
      banner.className = "banner idle";
      banner.textContent = "editing";
      goals.replaceChildren();
      results.replaceChildren();
      info.textContent = this.describeSelection();
      return;
    }

    const b = this.view.banner();
    banner.className = `banner ${b.status}`;
    banner.textContent = `${b.status}: ${b.detail}`;

    const snap = this.view.snapshot;
    info.textContent = snap
      ? `frame ${snap.frames.length || "-"} | ${snap.steps_used} steps | ${snap.backtracks_used} backtracks | ${snap.choice_depth} open choices`
      : "";

    goals.replaceChildren(
      ...this.view.goalBadges().map((g) => {
        const li = document.createElement("li");
        li.textContent = `${g.goalId} on ${g.wire}: ${g.text}` + (g.selected ? "  [selected]" : "") + (g.paused ? "  [paused]" : "");
        li.addEventListener("click", () => void this.send("select_goal", { goal: g.goalId }));
        return li;
      }),
    );
    results.replaceChildren(
      ...(snap?.results ?? []).map((g) => {
        const li = document.createElement("li");
        li.textContent = g.text;
        return li;
      }),
    );

    const controls = this.view.controls();
    for (const [cmd] of COMMAND_LABELS) {
      const btn = this.root.querySelector<HTMLButtonElement>(`#cmd-${cmd}`);
      const state = controls[cmd];
      if (btn && state) {
        btn.disabled = !state.enabled;
        btn.title = state.reason ?? "";
      }
    }
  }

  private describeSelection(): string {
    if (!this.selection) return "nothing selected";
    if (this.selection.kind === "node") {
      const n = this.model.graph(this.currentGraph).nodes[this.selection.id];
      if (!n) return "nothing selected";
      const what = n.k === "atomic" ? `tactic ${n.tactic}` : n.k === "nested" ? `nested graph ${n.graph}` : n.k;
      return `node '${this.selection.id}': ${what}`;
    }
    const w = this.model.graph(this.currentGraph).wires.find((w) => w.id === this.selection!.id);
    return w ? `wire '${w.id}': ${this.endText(w.src)} -> ${this.endText(w.dst)}, accepts ${w.gt}` : "nothing selected";
  }

  private endText(e: EndJson): string {
    if ("node" in e) return e.node;
    if ("in" in e) return `in${e.in}`;
    return `out${e.out}`;
  }

  private toast(message: string, ok = false): void {
    const host = this.root.ownerDocument.querySelector<HTMLElement>("#toasts")!;
    const div = document.createElement("div");
    div.className = ok ? "toast ok" : "toast";
    div.textContent = message;
    host.appendChild(div);
    setTimeout(() => div.remove(), 4000);
  }
}

export function boot(root: HTMLElement, baseUrl?: string): StudioApp {
  const url = baseUrl ?? (new URLSearchParams(location.search).get("api") || "http://127.0.0.1:8471");
  return new StudioApp(root, url);
}

declare global {
  interface Window {
    psgraphStudio?: StudioApp;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.psgraphStudio = boot(document.getElementById("app")!);
}
