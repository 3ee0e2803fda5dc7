/** Client-side checker for wire goal-type text, for inline editor feedback.
 *
 * Accepts exactly the server grammar:
 *
 *     GT   ::= lit (',' lit)* | 'any'
 *     lit  ::= '!'? atom
 *     atom ::= 'any' | 'concl_is' '(' sym ')' | 'hyp_is' '(' sym ')'
 *            | 'concl_in_hyps' | 'num_hyps' '(' cmp ',' int ')' | 'closed'
 *     sym  ::= 'atom' | 'true' | 'false' | 'not' | 'and' | 'or' | 'imp'
 *            | 'forall' | 'exists'
 *     cmp  ::= 'eq' | 'le' | 'ge'
 */

export const TOP_SYMBOLS: readonly string[] = [
  "atom",
  "true",
  "false",
  "not",
  "and",
  "or",
  "imp",
  "forall",
  "exists",
];

const CMPS: readonly string[] = ["eq", "le", "ge"];

export interface GtLit {
  neg: boolean;
  atom: GtAtom;
}

export type GtAtom =
  | { kind: "any" }
  | { kind: "concl_is"; sym: string }
  | { kind: "hyp_is"; sym: string }
  | { kind: "concl_in_hyps" }
  | { kind: "num_hyps"; cmp: string; n: number }
  | { kind: "closed" };

export class GoalTypeError extends Error {
  readonly offset: number;

  constructor(offset: number, message: string) {
    super(`offset ${offset}: ${message}`);
    this.offset = offset;
  }
}

interface Token {
  text: string;
  offset: number;
}

const TOKEN = /([a-zA-Z_][a-zA-Z0-9_]*|\d+|[(),!])/y;

function tokenize(text: string): Token[] {
  const out: Token[] = [];
  let i = 0;
  while (i < text.length) {
    if (text[i] === " " || text[i] === "\t") {
      i += 1;
      continue;
    }
    TOKEN.lastIndex = i;
    const m = TOKEN.exec(text);
    if (!m) throw new GoalTypeError(i, `bad character ${JSON.stringify(text[i])}`);
    out.push({ text: m[1], offset: i });
    i = TOKEN.lastIndex;
  }
  out.push({ text: "", offset: text.length });
  return out;
}

/** Parse goal-type text; throws GoalTypeError with the failing offset. */
export function parseGoalType(text: string): GtLit[] {
  const toks = tokenize(text);
  let pos = 0;

  const peek = () => toks[pos];
  const take = () => toks[pos++];
  const expect = (word: string) => {
    const t = take();
    if (t.text !== word) {
      throw new GoalTypeError(t.offset, `expected ${JSON.stringify(word)}, found ${JSON.stringify(t.text)}`);
    }
  };

  function atom(): GtAtom {
    const t = take();
    if (t.text === "any") return { kind: "any" };
    if (t.text === "concl_in_hyps") return { kind: "concl_in_hyps" };
    if (t.text === "closed") return { kind: "closed" };
    if (t.text === "concl_is" || t.text === "hyp_is") {
      expect("(");
      const sym = take();
      if (!TOP_SYMBOLS.includes(sym.text)) {
        throw new GoalTypeError(sym.offset, `unknown top symbol ${JSON.stringify(sym.text)}; one of ` + TOP_SYMBOLS.join(", "));
      }
      expect(")");
      return t.text === "concl_is" ? { kind: "concl_is", sym: sym.text } : { kind: "hyp_is", sym: sym.text };
    }
    if (t.text === "num_hyps") {
      expect("(");
      const cmp = take();
      if (!CMPS.includes(cmp.text)) {
        throw new GoalTypeError(cmp.offset, `unknown comparison ${JSON.stringify(cmp.text)}; one of ` + CMPS.join(", "));
      }
      expect(",");
      const num = take();
      if (!/^\d+$/.test(num.text)) {
        throw new GoalTypeError(num.offset, `expected a count, found ${JSON.stringify(num.text)}`);
      }
      expect(")");
      return { kind: "num_hyps", cmp: cmp.text, n: parseInt(num.text, 10) };
    }
    throw new GoalTypeError(t.offset, `unknown goal type atom ${JSON.stringify(t.text)}; one of any, concl_is, hyp_is, concl_in_hyps, num_hyps, closed`);
  }

  function lit(): GtLit {
    if (peek().text === "!") {
      take();
      return { neg: true, atom: atom() };
    }
    return { neg: false, atom: atom() };
  }

  const lits = [lit()];
  while (peek().text === ",") {
    take();
    lits.push(lit());
  }
  const t = peek();
  if (t.text !== "") throw new GoalTypeError(t.offset, `trailing input ${JSON.stringify(t.text)}`);
  if (lits.length === 1 && !lits[0].neg && lits[0].atom.kind === "any") return [];
  return lits;
}

/** null when the text parses, otherwise the error to show inline. */
export function goalTypeProblem(text: string): GoalTypeError | null {
  try {
    parseGoalType(text);
    return null;
  } catch (e) {
    if (e instanceof GoalTypeError) return e;
    throw e;
  }
}

/** Conjunctions no goal can satisfy: contradictory or over-constrained. */
export function unsatisfiable(lits: GtLit[]): boolean {
  const keys = lits.map((l) => JSON.stringify([l.neg, l.atom]));
  for (const l of lits) {
    if (keys.includes(JSON.stringify([!l.neg, l.atom]))) return true;
  }
  const posConcl = new Set(lits.filter((l) => !l.neg && l.atom.kind === "concl_is").map((l) => (l.atom as { sym: string }).sym));
  if (posConcl.size > 1) return true;
  if (lits.some((l) => l.neg && l.atom.kind === "any")) return true;
  return hypCountsEmpty(lits);
}

function hypCountsEmpty(lits: GtLit[]): boolean {
  const counts = lits.filter((l) => l.atom.kind === "num_hyps");
  if (counts.length === 0) return false;
  const hi = Math.max(...counts.map((l) => (l.atom as { n: number }).n)) + 2;
  let feasible = new Set<number>();
  for (let i = 0; i <= hi; i++) feasible.add(i);
  for (const l of counts) {
    const a = l.atom as { cmp: string; n: number };
    let ok = new Set<number>();
    if (a.cmp === "eq") ok.add(a.n);
    else if (a.cmp === "le") for (let i = 0; i <= Math.min(a.n, hi); i++) ok.add(i);
    else for (let i = a.n; i <= hi; i++) ok.add(i);
    if (l.neg) {
      const inv = new Set<number>();
      for (let i = 0; i <= hi; i++) if (!ok.has(i)) inv.add(i);
      ok = inv;
    }
    feasible = new Set([...feasible].filter((x) => ok.has(x)));
  }
  return feasible.size === 0;
}
