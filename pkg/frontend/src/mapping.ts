import type { ApiClient } from "./api.js";
import { ApiError } from "./api.js";
import { ACTION_TYPES, BUILTIN_ACTIONS, type MappingConfig } from "./types.js";

function clone(config: MappingConfig): MappingConfig {
  const out: MappingConfig = {};
  for (const [k, v] of Object.entries(config)) out[k] = [v[0], v[1]];
  return out;
}

function equal(a: MappingConfig, b: MappingConfig): boolean {
  const ka = Object.keys(a).sort();
  const kb = Object.keys(b).sort();
  if (ka.length !== kb.length) return false;
  return ka.every(
    (k, i) => k === kb[i] && a[k][0] === b[k][0] && a[k][1] === b[k][1],
  );
}

/** Client-side pre-validation mirroring the daemon's rules; the daemon
 * remains the authority (its rejection is surfaced via save()). */
export function validateMapping(config: MappingConfig): string[] {
  const problems: string[] = [];
  for (const [name, entry] of Object.entries(config)) {
    if (!name) problems.push("empty gesture name");
    if (!Array.isArray(entry) || entry.length !== 2) {
      problems.push(`${name}: entry must be [type, target]`);
      continue;
    }
    const [type, target] = entry;
    if (!(ACTION_TYPES as readonly string[]).includes(type)) {
      problems.push(`${name}: unknown action type "${type}"`);
    } else if (type === "py" && !(BUILTIN_ACTIONS as readonly string[]).includes(target)) {
      problems.push(`${name}: unknown built-in action "${target}"`);
    }
  }
  return problems;
}

/** Editable copy of the server's mapping with dirty tracking.
 *
 * dirty is true iff the local copy differs from the last
 * server-acknowledged mapping; save() clears it only on acceptance.
 */
export class MappingEditor {
  private server: MappingConfig = {};
  private local: MappingConfig = {};
  lastError: string | null = null;

  load(config: MappingConfig): void {
    this.server = clone(config);
    this.local = clone(config);
    this.lastError = null;
  }

  get entries(): MappingConfig {
    return this.local;
  }

  get dirty(): boolean {
    return !equal(this.local, this.server);
  }

  set(gesture: string, type: string, target: string): void {
    this.local[gesture] = [type, target];
  }

  remove(gesture: string): void {
    delete this.local[gesture];
  }

  cancel(): void {
    this.local = clone(this.server);
    this.lastError = null;
  }

  validate(): string[] {
    return validateMapping(this.local);
  }

  /** PUT the local table; on success the server copy advances and dirty
   * clears. On rejection nothing is saved and the error is surfaced. */
  async save(api: ApiClient): Promise<boolean> {
    try {
      const accepted = await api.putConfig(this.local);
      this.server = clone(accepted);
      this.local = clone(accepted);
      this.lastError = null;
      return true;
    } catch (err) {
      this.lastError = err instanceof ApiError ? err.message : String(err);
      return false;
    }
  }
}
