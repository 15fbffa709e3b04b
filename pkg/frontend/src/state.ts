/** Console state: the config draft being edited plus the last results.
 *
 * Every displayed artifact originates from exactly one server response;
 * the console computes nothing numeric beyond chart scaling.
 */

import { clampStage } from "./limits.js";
import type {
  CompareResponse,
  FreeUConfigBody,
  StageConfig,
  StageSite,
  TrajectoryResponse,
} from "./types.js";

export interface TrajectoryView {
  response: TrajectoryResponse;
  rCut: number;
  /** index into response.frames selected by the scrub slider */
  frameIndex: number;
}

export interface ConsoleState {
  serverUrl: string;
  sites: StageSite[];
  draft: FreeUConfigBody;
  seed: number;
  steps: number;
  compareResult: CompareResponse | null;
  trajectory: TrajectoryView | null;
  requestInFlight: boolean;
}

export function initialState(sites: StageSite[], defaults: FreeUConfigBody): ConsoleState {
  return {
    serverUrl: "",
    sites,
    draft: { enabled: true, stages: defaults.stages.map((st) => ({ ...st })) },
    seed: 0,
    steps: 0,
    compareResult: null,
    trajectory: null,
    requestInFlight: false,
  };
}

/** Commit one slider value, clamped to the stage's legal range. */
export function setStageValue(
  state: ConsoleState,
  l: number,
  field: "b" | "s" | "r_thresh",
  value: number,
): ConsoleState {
  const site = state.sites.find((s) => s.l === l);
  if (!site) throw new Error(`no decoder stage ${l}`);
  const stages = state.draft.stages.map((st) =>
    st.l === l ? clampStage({ ...st, [field]: value }, site) : st,
  );
  return { ...state, draft: { ...state.draft, stages } };
}

/** New r_cut keeps the already-fetched frames on screen; only the band
 * curves need re-requesting. */
export function setTrajectoryRCut(state: ConsoleState, rCut: number): ConsoleState {
  if (!state.trajectory) return state;
  return { ...state, trajectory: { ...state.trajectory, rCut } };
}

export function replaceTrajectoryCurves(
  state: ConsoleState,
  response: TrajectoryResponse,
  rCut: number,
): ConsoleState {
  const prev = state.trajectory;
  return {
    ...state,
    trajectory: {
      response: prev
        ? { ...response, frames: prev.response.frames }
        : response,
      rCut,
      frameIndex: prev ? prev.frameIndex : 0,
    },
  };
}

// ---------------------------------------------------------------------------
// shareable URL-encoded config (the only client-side persistence)

export interface SharedConfig {
  seed: number;
  steps: number;
  stages: StageConfig[];
}

export function encodeShareUrl(state: ConsoleState): string {
  const payload: SharedConfig = {
    seed: state.seed,
    steps: state.steps,
    stages: state.draft.stages,
  };
  return `#cfg=${encodeURIComponent(JSON.stringify(payload))}`;
}

export function decodeShareUrl(hash: string): SharedConfig | null {
  const m = /^#cfg=(.+)$/.exec(hash);
  if (!m || m[1] === undefined) return null;
  try {
    const raw = JSON.parse(decodeURIComponent(m[1])) as SharedConfig;
    if (!Array.isArray(raw.stages)) return null;
    return raw;
  } catch {
    return null;
  }
}
