/** SVG rendering of one graph: boundary ports, nodes by kind, wires with
 * goal-type labels, plus session overlays (goal badges, breakpoint
 * markers).  Pure draw-from-data; gestures call back out and the caller
 * re-renders.
 */
import type { EndJson, GraphJson } from "./types.js";
import type { GoalBadge } from "./session.js";
import type { Point } from "./canvas.js";

export interface RenderHandlers {
  onNodeClick?(id: string, ev: MouseEvent): void;
  onNodeDouble?(id: string): void;
  onNodeDrag?(id: string, to: Point): void;
  onWireClick?(id: string): void;
  onWireDouble?(id: string): void;
  onPortDrag?(from: EndJson, to: EndJson): void;
  onBadgeClick?(goalId: string): void;
  onCanvasClick?(at: Point): void;
}

export interface RenderOptions {
  layoutNodes: Record<string, Point>;
  badges?: GoalBadge[];
  breakpointWires?: string[];
  selection?: { kind: "node" | "wire"; id: string } | null;
  editable: boolean;
  handlers: RenderHandlers;
}

const SVG_NS = "http://www.w3.org/2000/svg";
const NODE_W = 96;
const NODE_H = 34;

function el<K extends keyof SVGElementTagNameMap>(tag: K, attrs: Record<string, string>): SVGElementTagNameMap[K] {
  const e = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) e.setAttribute(k, v);
  return e;
}

function endKey(e: EndJson): string {
  if ("node" in e) return `node:${e.node}`;
  if ("in" in e) return `in:${e.in}`;
  return `out:${e.out}`;
}

export class GraphRenderer {
  private svg: SVGSVGElement;
  private positions = new Map<string, Point>();
  private dragging: { node: string; dx: number; dy: number } | null = null;
  private wiring: { from: EndJson; line: SVGLineElement } | null = null;

  constructor(svg: SVGSVGElement) {
    this.svg = svg;
  }

  render(graph: GraphJson, opts: RenderOptions): void {
    this.svg.replaceChildren();
    this.positions = this.placed(graph, opts.layoutNodes);

    const defs = el("defs", {});
    const marker = el("marker", { id: "arrow", viewBox: "0 0 10 10", refX: "9", refY: "5", markerWidth: "7", markerHeight: "7", orient: "auto-start-reverse" });
    marker.appendChild(el("path", { d: "M 0 0 L 10 5 L 0 10 z", fill: "var(--line-strong)" }));
    defs.appendChild(marker);
    this.svg.appendChild(defs);

    this.svg.onclick = (ev) => {
      if (ev.target === this.svg && opts.handlers.onCanvasClick) {
        opts.handlers.onCanvasClick(this.svgPoint(ev));
      }
    };

    for (const w of graph.wires) this.drawWire(w.id, w.src, w.dst, w.gt, opts);
    this.drawBoundaries(graph, opts);
    for (const id of Object.keys(graph.nodes).sort()) this.drawNode(graph, id, opts);
    this.drawBadges(opts);

    this.svg.onmousemove = (ev) => {
      if (this.dragging && opts.editable) {
        const p = this.svgPoint(ev);
        const to = { x: p.x - this.dragging.dx, y: p.y - this.dragging.dy };
        opts.handlers.onNodeDrag?.(this.dragging.node, to);
      } else if (this.wiring) {
        const p = this.svgPoint(ev);
        this.wiring.line.setAttribute("x2", String(p.x));
        this.wiring.line.setAttribute("y2", String(p.y));
      }
    };
    this.svg.onmouseup = (ev) => {
      if (this.wiring) {
        const target = this.endAt(this.svgPoint(ev), graph);
        if (target && endKey(target) !== endKey(this.wiring.from)) {
          opts.handlers.onPortDrag?.(this.wiring.from, target);
        }
        this.wiring.line.remove();
        this.wiring = null;
      }
      this.dragging = null;
    };
  }

  /** Every endpoint gets a position: stored geometry wins, the rest fall
   *  onto a simple left-to-right grid so untouched documents still draw. */
  private placed(graph: GraphJson, layout: Record<string, Point>): Map<string, Point> {
    const pos = new Map<string, Point>();
    let auto = 0;
    for (const id of Object.keys(graph.nodes).sort()) {
      const p = layout[id];
      pos.set(`node:${id}`, p ? { ...p } : { x: 180 + (auto % 3) * 170, y: 70 + Math.floor(auto / 3) * 90 });
      if (!p) auto += 1;
    }
    for (let i = 0; i < graph.n_inputs; i++) pos.set(`in:${i}`, { x: 40, y: 60 + i * 70 });
    for (let i = 0; i < graph.n_outputs; i++) pos.set(`out:${i}`, { x: 640, y: 60 + i * 70 });
    return pos;
  }

  private center(e: EndJson): Point {
    return this.positions.get(endKey(e)) ?? { x: 0, y: 0 };
  }

  private svgPoint(ev: MouseEvent): Point {
    const rect = this.svg.getBoundingClientRect();
    return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
  }

  private endAt(p: Point, graph: GraphJson): EndJson | null {
    for (const id of Object.keys(graph.nodes)) {
      const c = this.center({ node: id });
      if (Math.abs(p.x - c.x) <= NODE_W / 2 && Math.abs(p.y - c.y) <= NODE_H / 2 + 8) return { node: id };
    }
    for (let i = 0; i < graph.n_inputs; i++) {
      const c = this.center({ in: i });
      if (Math.hypot(p.x - c.x, p.y - c.y) < 18) return { in: i };
    }
    for (let i = 0; i < graph.n_outputs; i++) {
      const c = this.center({ out: i });
      if (Math.hypot(p.x - c.x, p.y - c.y) < 18) return { out: i };
    }
    return null;
  }

  private drawWire(id: string, src: EndJson, dst: EndJson, gt: string, opts: RenderOptions): void {
    const a = this.center(src);
    const b = this.center(dst);
    const group = el("g", { class: "wire" + (opts.selection?.kind === "wire" && opts.selection.id === id ? " selected" : "") });
    const isStop = opts.breakpointWires?.includes(id) ?? false;
    const line = el("line", {
      x1: String(a.x),
      y1: String(a.y),
      x2: String(b.x),
      y2: String(b.y),
      class: isStop ? "wire-line stop" : "wire-line",
      "marker-end": "url(#arrow)",
    });
    const hit = el("line", { x1: String(a.x), y1: String(a.y), x2: String(b.x), y2: String(b.y), class: "wire-hit" });
    hit.addEventListener("click", (ev) => {
      ev.stopPropagation();
      opts.handlers.onWireClick?.(id);
    });
    hit.addEventListener("dblclick", (ev) => {
      ev.stopPropagation();
      opts.handlers.onWireDouble?.(id);
    });
    group.appendChild(line);
    group.appendChild(hit);
    const mid = { x: (a.x + b.x) / 2, y: (a.y + b.y) / 2 };
    const label = el("text", { x: String(mid.x), y: String(mid.y - 8), class: "wire-label", "text-anchor": "middle" });
    label.textContent = gt === "any" ? id : `${id}: ${gt}`;
    group.appendChild(label);
    if (isStop) {
      const stop = el("circle", { cx: String(mid.x), cy: String(mid.y), r: "6", class: "stop-marker" });
      group.appendChild(stop);
    }
    this.svg.appendChild(group);
  }

  private drawBoundaries(graph: GraphJson, opts: RenderOptions): void {
    for (let i = 0; i < graph.n_inputs; i++) this.drawPort({ in: i }, `in${i}`, opts);
    for (let i = 0; i < graph.n_outputs; i++) this.drawPort({ out: i }, `out${i}`, opts);
  }

  private drawPort(end: EndJson, label: string, opts: RenderOptions): void {
    const c = this.center(end);
    const g = el("g", { class: "port" });
    g.appendChild(el("circle", { cx: String(c.x), cy: String(c.y), r: "10", class: "port-dot" }));
    const t = el("text", { x: String(c.x), y: String(c.y - 16), "text-anchor": "middle", class: "port-label" });
    t.textContent = label;
    g.appendChild(t);
    g.addEventListener("mousedown", (ev) => {
      if (!opts.editable) return;
      ev.preventDefault();
      this.beginWire(end, c);
    });
    this.svg.appendChild(g);
  }

  private drawNode(graph: GraphJson, id: string, opts: RenderOptions): void {
    const node = graph.nodes[id];
    const c = this.center({ node: id });
    const selected = opts.selection?.kind === "node" && opts.selection.id === id;
    const g = el("g", { class: `node kind-${node.k}` + (selected ? " selected" : "") });

    if (node.k === "identity") {
      g.appendChild(el("circle", { cx: String(c.x), cy: String(c.y), r: "16", class: "node-shape" }));
    } else if (node.k === "breakpoint") {
      g.appendChild(el("rect", { x: String(c.x - 14), y: String(c.y - 14), width: "28", height: "28", transform: `rotate(45 ${c.x} ${c.y})`, class: "node-shape" }));
    } else {
      g.appendChild(el("rect", { x: String(c.x - NODE_W / 2), y: String(c.y - NODE_H / 2), width: String(NODE_W), height: String(NODE_H), rx: "6", class: "node-shape" }));
      if (node.k === "nested") {
        g.appendChild(el("rect", { x: String(c.x - NODE_W / 2 + 4), y: String(c.y - NODE_H / 2 + 4), width: String(NODE_W - 8), height: String(NODE_H - 8), rx: "4", class: "node-inner" }));
      }
    }
    const name = el("text", { x: String(c.x), y: String(c.y - 2), "text-anchor": "middle", class: "node-name" });
    name.textContent = id;
    g.appendChild(name);
    const detail = el("text", { x: String(c.x), y: String(c.y + 12), "text-anchor": "middle", class: "node-detail" });
    detail.textContent = node.k === "atomic" ? node.tactic! : node.k === "nested" ? `[${node.graph}]` : node.k;
    g.appendChild(detail);

    g.addEventListener("click", (ev) => {
      ev.stopPropagation();
      opts.handlers.onNodeClick?.(id, ev);
    });
    g.addEventListener("dblclick", (ev) => {
      ev.stopPropagation();
      opts.handlers.onNodeDouble?.(id);
    });
    g.addEventListener("mousedown", (ev) => {
      if (!opts.editable) return;
      ev.preventDefault();
      if (ev.shiftKey) {
        this.beginWire({ node: id }, c);
      } else {
        const p = this.svgPoint(ev);
        this.dragging = { node: id, dx: p.x - c.x, dy: p.y - c.y };
      }
    });
    this.svg.appendChild(g);
  }

  private beginWire(from: EndJson, at: Point): void {
    const line = el("line", { x1: String(at.x), y1: String(at.y), x2: String(at.x), y2: String(at.y), class: "wire-draft" });
    this.svg.appendChild(line);
    this.wiring = { from, line };
  }

  private drawBadges(opts: RenderOptions): void {
    if (!opts.badges) return;
    const perWire = new Map<string, GoalBadge[]>();
    for (const b of opts.badges) {
      const list = perWire.get(b.wire) ?? [];
      list.push(b);
      perWire.set(b.wire, list);
    }
    for (const [wire, list] of perWire) {
      // badges sit along their wire, offset so stacked goals stay readable
      const lineEl = [...this.svg.querySelectorAll("g.wire")].find((g) => g.querySelector(".wire-label")?.textContent?.startsWith(wire));
      const line = lineEl?.querySelector(".wire-line");
      if (!line) continue;
      const x1 = Number(line.getAttribute("x1"));
      const y1 = Number(line.getAttribute("y1"));
      const x2 = Number(line.getAttribute("x2"));
      const y2 = Number(line.getAttribute("y2"));
      list.forEach((b, i) => {
        const t = 0.35 + i * 0.18;
        const cx = x1 + (x2 - x1) * t;
        const cy = y1 + (y2 - y1) * t;
        const g = el("g", { class: "badge" + (b.selected ? " selected" : "") + (b.paused ? " paused" : "") });
        g.appendChild(el("circle", { cx: String(cx), cy: String(cy), r: "11", class: "badge-dot" }));
        const label = el("text", { x: String(cx), y: String(cy + 4), "text-anchor": "middle", class: "badge-label" });
        label.textContent = b.goalId;
        g.appendChild(label);
        const title = el("title", {});
        title.textContent = b.text;
        g.appendChild(title);
        g.addEventListener("click", (ev) => {
          ev.stopPropagation();
          opts.handlers.onBadgeClick?.(b.goalId);
        });
        this.svg.appendChild(g);
      });
    }
  }
}
