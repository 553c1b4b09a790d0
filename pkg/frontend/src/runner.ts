/** Spawns the `wsdist` command line tool and returns its stdout. */

import { spawnSync } from "node:child_process";

/** Override with e.g. WSDIST_CMD="python3 -m wsdist.cli". */
function command(): string[] {
  const raw = process.env.WSDIST_CMD;
  return raw ? raw.split(/\s+/) : ["wsdist"];
}

export function runCli(args: string[]): string {
  const [cmd, ...pre] = command();
  const res = spawnSync(cmd, [...pre, ...args], {
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (res.error) throw res.error;
  if (res.status !== 0) {
    throw new Error(
      `wsdist ${args[0]} exited with code ${res.status}: ${res.stderr.trim()}`,
    );
  }
  return res.stdout;
}
