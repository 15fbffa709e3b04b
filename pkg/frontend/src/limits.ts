/** Client-side slider limits.
 *
 * These mirror the server's stage-config invariants so that ordinary
 * slider interaction can never produce a request the server would reject;
 * a forced out-of-range value (e.g. typed into the number input) is
 * reported by `validateStage` and, if sent anyway, surfaces the server's
 * 422 message instead.
 */

import type { StageConfig, StageSite } from "./types.js";

export const B_RANGE: [number, number] = [0.5, 2.0];
export const S_RANGE: [number, number] = [0.0, 1.5];

/** Largest meaningful radial threshold at a stage: the corner radius of
 * its centered spectrum. */
export function maxRadius(site: StageSite): number {
  return (site.size / 2) * Math.SQRT2;
}

export function clamp(value: number, lo: number, hi: number): number {
  if (Number.isNaN(value)) return lo;
  return Math.min(hi, Math.max(lo, value));
}

export function clampStage(stage: StageConfig, site: StageSite): StageConfig {
  return {
    ...stage,
    b: clamp(stage.b, B_RANGE[0], B_RANGE[1]),
    s: clamp(stage.s, S_RANGE[0], S_RANGE[1]),
    r_thresh: clamp(stage.r_thresh, 0, maxRadius(site)),
  };
}

export interface FieldError {
  field: "b" | "s" | "r_thresh";
  message: string;
}

/** Returns the invariant violations of a (possibly forced) stage config. */
export function validateStage(stage: StageConfig, site: StageSite): FieldError[] {
  const errors: FieldError[] = [];
  if (stage.b < B_RANGE[0] || stage.b > B_RANGE[1]) {
    errors.push({ field: "b", message: `b must be in [${B_RANGE[0]}, ${B_RANGE[1]}]` });
  }
  if (stage.s < S_RANGE[0] || stage.s > S_RANGE[1]) {
    errors.push({ field: "s", message: `s must be in [${S_RANGE[0]}, ${S_RANGE[1]}]` });
  }
  const rMax = maxRadius(site);
  if (stage.r_thresh < 0 || stage.r_thresh > rMax) {
    errors.push({
      field: "r_thresh",
      message: `r_thresh must be in [0, ${rMax.toFixed(2)}]`,
    });
  }
  return errors;
}

/** True when every stage is an exact server-side no-op. */
export function isIdentityConfig(stages: StageConfig[]): boolean {
  return stages.every((st) => st.b === 1.0 && st.s === 1.0);
}
