/** Spawns the real session server for tests and shells out to the engine
 * for reference values, so everything here is checked against the same
 * process a user would run. */
import { spawn, execFileSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, copyFileSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join, resolve, dirname } from "node:path";
import { fileURLToPath } from "node:url";

const HERE = dirname(fileURLToPath(import.meta.url));
export const REPO = resolve(HERE, "..", "..");
export const STRATEGIES = join(REPO, "strategies");

export function freePort(): Promise<number> {
  return new Promise((resolvePort, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const address = srv.address();
      if (address && typeof address === "object") {
        const port = address.port;
        srv.close(() => resolvePort(port));
      } else {
        srv.close(() => reject(new Error("no port assigned")));
      }
    });
  });
}

export interface LiveServer {
  url: string;
  root: string;
  stop(): void;
}

/** Start `psgraph serve` on a private copy of the shipped strategies. */
export async function startServer(extraFiles: string[] = []): Promise<LiveServer> {
  const root = mkdtempSync(join(tmpdir(), "psg-studio-"));
  for (const name of ["disj_pick.psg.json", "identity.psg.json", "quant_elim.psg.json", ...extraFiles]) {
    copyFileSync(join(STRATEGIES, name), join(root, name));
  }
  const port = await freePort();
  const proc: ChildProcess = spawn("python3", ["-m", "psgraph.cli", "serve", "--root", root, "--port", String(port)], {
    cwd: REPO,
    stdio: ["ignore", "ignore", "pipe"],
  });
  let stderr = "";
  proc.stderr!.on("data", (d: Buffer) => {
    stderr += d.toString();
  });

  const url = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 15000;
  for (;;) {
    try {
      const res = await fetch(url + "/health");
      if (res.ok) break;
    } catch {
      // not up yet
    }
    if (proc.exitCode !== null) throw new Error(`server exited early: ${stderr}`);
    if (Date.now() > deadline) throw new Error(`server never came up: ${stderr}`);
    await new Promise((r) => setTimeout(r, 100));
  }

  return {
    url,
    root,
    stop() {
      proc.kill();
      rmSync(root, { recursive: true, force: true });
    },
  };
}

/** Run a python snippet against the installed engine, returning stdout. */
export function python(code: string): string {
  return execFileSync("python3", ["-c", code], { cwd: REPO, encoding: "utf-8" });
}

/** Run the CLI, returning stdout+exit code without throwing on failure. */
export function cli(args: string[], stdin?: string): { stdout: string; stderr: string; code: number } {
  try {
    const stdout = execFileSync("python3", ["-m", "psgraph.cli", ...args], {
      cwd: REPO,
      encoding: "utf-8",
      input: stdin,
    });
    return { stdout, stderr: "", code: 0 };
  } catch (e) {
    const err = e as { stdout?: string; stderr?: string; status?: number };
    return { stdout: err.stdout ?? "", stderr: err.stderr ?? "", code: err.status ?? 1 };
  }
}
