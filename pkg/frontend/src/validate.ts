/** Client-side document validation: the same codes the server's linter
 * reports, so problems surface inline before a save round-trips to a 422.
 *
 * E001 unknown tactic, E002 dangling reference, E003 nesting cycle,
 * E004 boundary index out of range, E005 unreachable node, W001 goal type
 * that accepts no goal.  The server stays the authority; this mirror only
 * has to agree on clean-vs-broken so Save can be blocked early.
 */
import type { Diagnostic, DocumentJson, EndJson, GraphJson } from "./types.js";
import { BUILTIN_TACTICS } from "./types.js";
import { goalTypeProblem, parseGoalType, unsatisfiable } from "./goaltypes.js";

const NAME = /^[A-Za-z0-9_-]+$/;

/** Shape problems that make the document unsendable (not lint findings). */
export function schemaProblems(doc: DocumentJson): string[] {
  const out: string[] = [];
  if (doc.version !== 1) out.push(`unsupported version ${doc.version}`);
  if (!doc.graphs || typeof doc.graphs !== "object") {
    out.push("graphs must be an object");
    return out;
  }
  for (const [gname, g] of Object.entries(doc.graphs)) {
    if (!NAME.test(gname)) out.push(`bad graph name ${JSON.stringify(gname)}`);
    if (!Number.isInteger(g.n_inputs) || g.n_inputs < 0) out.push(`${gname}: n_inputs must be a non-negative integer`);
    if (!Number.isInteger(g.n_outputs) || g.n_outputs < 0) out.push(`${gname}: n_outputs must be a non-negative integer`);
    for (const [nid, n] of Object.entries(g.nodes)) {
      if (!NAME.test(nid)) out.push(`${gname}: bad node id ${JSON.stringify(nid)}`);
      if (n.k === "atomic" && !n.tactic) out.push(`${gname}/${nid}: atomic node needs a tactic`);
      if (n.k === "nested" && !n.graph) out.push(`${gname}/${nid}: nested node needs a graph`);
      if (!["atomic", "nested", "identity", "breakpoint"].includes(n.k)) out.push(`${gname}/${nid}: unknown node kind`);
    }
    const seen = new Set<string>();
    for (const w of g.wires) {
      if (!NAME.test(w.id)) out.push(`${gname}: bad wire id ${JSON.stringify(w.id)}`);
      if (seen.has(w.id)) out.push(`${gname}: duplicate wire id ${JSON.stringify(w.id)}`);
      seen.add(w.id);
      const p = goalTypeProblem(w.gt);
      if (p) out.push(`${gname}/${w.id}: ${p.message}`);
    }
  }
  if (!doc.graphs[doc.main]) out.push(`main graph ${JSON.stringify(doc.main)} is missing`);
  return out;
}

function endNode(e: EndJson): string | null {
  return "node" in e ? e.node : null;
}

function reachable(g: GraphJson): Set<string> {
  const seen = new Set<string>();
  const frontier: string[] = [];
  for (const w of g.wires) {
    const dst = endNode(w.dst);
    if ("in" in (w.src as object) && dst) frontier.push(dst);
  }
  while (frontier.length) {
    const nid = frontier.pop()!;
    if (seen.has(nid)) continue;
    seen.add(nid);
    for (const w of g.wires) {
      const dst = endNode(w.dst);
      if (endNode(w.src) === nid && dst && !seen.has(dst)) frontier.push(dst);
    }
  }
  return seen;
}

/** Lint preview with the server's codes, sorted the server's way. */
export function lintPreview(doc: DocumentJson, knownTactics: readonly string[] = BUILTIN_TACTICS): Diagnostic[] {
  const out: Diagnostic[] = [];
  const graphNames = Object.keys(doc.graphs).sort();

  for (const gname of graphNames) {
    const g = doc.graphs[gname];
    for (const nid of Object.keys(g.nodes).sort()) {
      const n = g.nodes[nid];
      if (n.k === "nested" && !(n.graph! in doc.graphs)) {
        out.push({ code: "E002", graph: gname, loc: nid, message: `nested node refers to missing graph '${n.graph}'` });
      }
      if (n.k === "atomic" && !knownTactics.includes(n.tactic!)) {
        out.push({ code: "E001", graph: gname, loc: nid, message: `unknown tactic '${n.tactic}'` });
      }
    }
    for (const w of g.wires) {
      for (const end of [w.src, w.dst]) {
        const nid = endNode(end);
        if (nid && !(nid in g.nodes)) {
          out.push({ code: "E002", graph: gname, loc: w.id, message: `wire endpoint refers to missing node '${nid}'` });
        }
      }
      if ("in" in (w.src as object) && (w.src as { in: number }).in >= g.n_inputs) {
        out.push({ code: "E004", graph: gname, loc: w.id, message: `input boundary ${(w.src as { in: number }).in} out of range (n_inputs=${g.n_inputs})` });
      }
      if ("out" in (w.dst as object) && (w.dst as { out: number }).out >= g.n_outputs) {
        out.push({ code: "E004", graph: gname, loc: w.id, message: `output boundary ${(w.dst as { out: number }).out} out of range (n_outputs=${g.n_outputs})` });
      }
      if (!goalTypeProblem(w.gt) && unsatisfiable(parseGoalType(w.gt))) {
        out.push({ code: "W001", graph: gname, loc: w.id, message: `goal type '${w.gt}' accepts no goal` });
      }
    }
    const reach = reachable(g);
    for (const nid of Object.keys(g.nodes).sort()) {
      if (!reach.has(nid)) {
        out.push({ code: "E005", graph: gname, loc: nid, message: "node is unreachable from the input boundaries" });
      }
    }
  }

  if (!(doc.main in doc.graphs)) {
    out.push({ code: "E002", graph: doc.main, loc: "", message: "main graph is missing" });
  }

  // nesting must form a DAG over graph definitions
  const color = new Map<string, number>();
  const visit = (name: string, trail: string[]) => {
    const state = color.get(name) ?? 0;
    if (state === 1) {
      const cycle = trail.slice(trail.indexOf(name)).concat([name]);
      out.push({ code: "E003", graph: name, loc: "", message: "nesting cycle: " + cycle.join(" -> ") });
      return;
    }
    if (state === 2 || !(name in doc.graphs)) return;
    color.set(name, 1);
    for (const nid of Object.keys(doc.graphs[name].nodes).sort()) {
      const n = doc.graphs[name].nodes[nid];
      if (n.k === "nested" && n.graph! in doc.graphs) visit(n.graph!, trail.concat([name]));
    }
    color.set(name, 2);
  };
  for (const name of graphNames) visit(name, []);

  return out.sort((a, b) =>
    a.graph !== b.graph ? (a.graph < b.graph ? -1 : 1) : a.code !== b.code ? (a.code < b.code ? -1 : 1) : a.loc < b.loc ? -1 : a.loc > b.loc ? 1 : 0,
  );
}

export function lintErrors(diags: Diagnostic[]): Diagnostic[] {
  return diags.filter((d) => d.code.startsWith("E"));
}
