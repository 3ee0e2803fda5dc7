/** Editor-side mirror of a strategy document plus layout geometry.
 *
 * Geometry (node positions, one optional control point per wire) lives in
 * the document's "ui" field, which the engine preserves verbatim and never
 * reads, so a drawn document and its hand-written twin evaluate the same.
 * Every structural edit keeps the mirror in a shape that serializes
 * directly to the wire format; Save is blocked while validate() reports
 * error-severity findings.
 */
import type { Diagnostic, DocumentJson, EndJson, GraphJson, NodeKind } from "./types.js";
import { jsonEqual } from "./types.js";
import { goalTypeProblem } from "./goaltypes.js";
import { lintErrors, lintPreview, schemaProblems } from "./validate.js";

export interface Point {
  x: number;
  y: number;
}

interface LayoutJson {
  nodes: Record<string, Point>;
  wires: Record<string, Point>;
}

function clone<T>(v: T): T {
  return JSON.parse(JSON.stringify(v)) as T;
}

export class CanvasModel {
  version = 1;
  main: string;
  graphs: Record<string, GraphJson>;
  layout: Record<string, LayoutJson> = {};
  /** ui payload found on load, minus our layout key; kept so foreign
   *  editor state survives a round-trip through this editor. */
  private extraUi: Record<string, unknown> = {};

  constructor(main = "main") {
    this.main = main;
    this.graphs = { [main]: { n_inputs: 1, n_outputs: 1, nodes: {}, wires: [] } };
  }

  static fromDocument(doc: DocumentJson): CanvasModel {
    const m = new CanvasModel(doc.main);
    m.version = doc.version;
    m.graphs = clone(doc.graphs);
    if (doc.ui && typeof doc.ui === "object" && !Array.isArray(doc.ui)) {
      const ui = clone(doc.ui) as Record<string, unknown>;
      const layout = ui["layout"];
      if (layout && typeof layout === "object" && !Array.isArray(layout)) {
        m.layout = layout as Record<string, LayoutJson>;
      }
      delete ui["layout"];
      m.extraUi = ui;
    }
    return m;
  }

  toDocument(): DocumentJson {
    const doc: DocumentJson = { version: this.version, main: this.main, graphs: clone(this.graphs) };
    const ui: Record<string, unknown> = { ...clone(this.extraUi) };
    if (Object.keys(this.layout).length > 0) ui["layout"] = clone(this.layout);
    if (Object.keys(ui).length > 0) doc.ui = ui;
    return doc;
  }

  graph(name: string): GraphJson {
    const g = this.graphs[name];
    if (!g) throw new Error(`no graph named '${name}'`);
    return g;
  }

  // --- structural edits ------------------------------------------------------

  addGraph(name: string, nInputs = 1, nOutputs = 1): void {
    if (this.graphs[name]) throw new Error(`graph '${name}' already exists`);
    this.graphs[name] = { n_inputs: nInputs, n_outputs: nOutputs, nodes: {}, wires: [] };
  }

  deleteGraph(name: string): void {
    if (name === this.main) throw new Error("cannot delete the main graph");
    delete this.graphs[name];
    delete this.layout[name];
  }

  setBoundaries(graph: string, nInputs: number, nOutputs: number): void {
    const g = this.graph(graph);
    g.n_inputs = nInputs;
    g.n_outputs = nOutputs;
  }

  addNode(graph: string, id: string, kind: NodeKind, arg: string | null, at: Point): void {
    const g = this.graph(graph);
    if (g.nodes[id]) throw new Error(`node '${id}' already exists`);
    g.nodes[id] = this.makeNode(kind, arg);
    this.layoutFor(graph).nodes[id] = { ...at };
  }

  /** Change what an existing node is (kind and tactic/subgraph argument). */
  retypeNode(graph: string, id: string, kind: NodeKind, arg: string | null): void {
    const g = this.graph(graph);
    if (!g.nodes[id]) throw new Error(`no node named '${id}'`);
    g.nodes[id] = this.makeNode(kind, arg);
  }

  /** Remove the node and its geometry.  Wires pointing at it stay: the
   *  dangling ends show up as E002 in validate(), which blocks Save until
   *  the user deletes or re-targets them. */
  deleteNode(graph: string, id: string): void {
    const g = this.graph(graph);
    delete g.nodes[id];
    delete this.layoutFor(graph).nodes[id];
  }

  moveNode(graph: string, id: string, to: Point): void {
    this.layoutFor(graph).nodes[id] = { ...to };
  }

  addWire(graph: string, id: string, src: EndJson, dst: EndJson, gt = "any"): void {
    const g = this.graph(graph);
    if (g.wires.some((w) => w.id === id)) throw new Error(`wire '${id}' already exists`);
    const p = goalTypeProblem(gt);
    if (p) throw p;
    g.wires.push({ id, src, dst, gt });
    g.wires.sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  }

  deleteWire(graph: string, id: string): void {
    const g = this.graph(graph);
    g.wires = g.wires.filter((w) => w.id !== id);
    delete this.layoutFor(graph).wires[id];
  }

  /** Returns the inline problem instead of applying a bad goal type. */
  setWireType(graph: string, id: string, gt: string): ReturnType<typeof goalTypeProblem> {
    const g = this.graph(graph);
    const w = g.wires.find((w) => w.id === id);
    if (!w) throw new Error(`no wire named '${id}'`);
    const p = goalTypeProblem(gt);
    if (p) return p;
    w.gt = gt;
    return null;
  }

  setWireControlPoint(graph: string, id: string, at: Point): void {
    this.layoutFor(graph).wires[id] = { ...at };
  }

  freshNodeId(graph: string, stem = "n"): string {
    const g = this.graph(graph);
    for (let i = 0; ; i++) {
      const id = `${stem}${i}`;
      if (!g.nodes[id]) return id;
    }
  }

  freshWireId(graph: string): string {
    const g = this.graph(graph);
    for (let i = 0; ; i++) {
      const id = `w${i}`;
      if (!g.wires.some((w) => w.id === id)) return id;
    }
  }

  // --- validation and comparison ----------------------------------------------

  /** Everything that would block a save: schema shape first, then the
   *  lint-preview findings with the server's codes. */
  validate(knownTactics?: readonly string[]): { schema: string[]; diagnostics: Diagnostic[] } {
    const doc = this.toDocument();
    const schema = schemaProblems(doc);
    const diagnostics = schema.length === 0 ? lintPreview(doc, knownTactics) : [];
    return { schema, diagnostics };
  }

  savable(knownTactics?: readonly string[]): boolean {
    const v = this.validate(knownTactics);
    return v.schema.length === 0 && lintErrors(v.diagnostics).length === 0;
  }

  equals(other: CanvasModel): boolean {
    return jsonEqual(this.toDocument(), other.toDocument());
  }

  private makeNode(kind: NodeKind, arg: string | null) {
    if (kind === "atomic") {
      if (!arg) throw new Error("atomic node needs a tactic name");
      return { k: kind, tactic: arg };
    }
    if (kind === "nested") {
      if (!arg) throw new Error("nested node needs a graph name");
      return { k: kind, graph: arg };
    }
    return { k: kind };
  }

  private layoutFor(graph: string): LayoutJson {
    let l = this.layout[graph];
    if (!l) {
      l = { nodes: {}, wires: {} };
      this.layout[graph] = l;
    }
    return l;
  }
}
