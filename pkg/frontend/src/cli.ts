#!/usr/bin/env node
/**
 * plot --in runs.csv[,more.csv] --out figure.png [--linear-y]
 *      [--group tau] [--panel topology]
 *
 * Renders convergence figures from experiment CSV logs: y is the mean
 * stationarity metric across seeds at each iteration, log scale by default.
 * Exits 0 on success, 1 on schema/data errors, 2 on usage errors.
 */

import { PlotError, render, SchemaError } from "./plot";
import { GroupKey } from "./series";

const GROUP_KEYS: GroupKey[] = ["topology", "n", "d", "tau", "seed", "alpha"];

export interface CliArgs {
  inputs: string[];
  output: string;
  logY: boolean;
  groupBy: GroupKey;
  panelBy: GroupKey;
}

export class UsageError extends Error {}

export function parseArgs(argv: string[]): CliArgs {
  const args: CliArgs = {
    inputs: [],
    output: "",
    logY: true,
    groupBy: "tau",
    panelBy: "topology",
  };
  const takeValue = (flag: string, i: number): string => {
    if (i + 1 >= argv.length) throw new UsageError(`${flag} needs a value`);
    return argv[i + 1];
  };
  const asKey = (flag: string, value: string): GroupKey => {
    if (!GROUP_KEYS.includes(value as GroupKey)) {
      throw new UsageError(`${flag} must be one of ${GROUP_KEYS.join(", ")}; got "${value}"`);
    }
    return value as GroupKey;
  };
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--in":
        args.inputs.push(...takeValue("--in", i).split(",").filter((s) => s.length > 0));
        i++;
        break;
      case "--out":
        args.output = takeValue("--out", i);
        i++;
        break;
      case "--linear-y":
        args.logY = false;
        break;
      case "--group":
        args.groupBy = asKey("--group", takeValue("--group", i));
        i++;
        break;
      case "--panel":
        args.panelBy = asKey("--panel", takeValue("--panel", i));
        i++;
        break;
      default:
        throw new UsageError(`unknown argument "${argv[i]}"`);
    }
  }
  if (args.inputs.length === 0) throw new UsageError("--in is required");
  if (!args.output) throw new UsageError("--out is required");
  return args;
}

export function main(argv: string[]): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 2;
  }
  try {
    render(args);
  } catch (err) {
    if (err instanceof SchemaError || err instanceof PlotError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    throw err;
  }
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
