/** Payload types for the /api endpoints served by `freeu-lab serve`. */

export interface StageConfig {
  l: number;
  b: number;
  s: number;
  r_thresh: number;
  channel_fraction?: number;
  structure_scaling?: boolean;
}

export interface FreeUConfigBody {
  enabled: boolean;
  stages: StageConfig[];
}

export interface StageSite {
  l: number;
  backbone_channels: number;
  skip_channels: number;
  size: number;
}

export interface ConfigResponse {
  freeu: FreeUConfigBody;
  stages: StageSite[];
  slider_limits: { b: [number, number]; s: [number, number] };
}

export interface HealthResponse {
  status: string;
  model: {
    image_size: number;
    in_channels: number;
    widths: number[];
    schedule_steps: number;
    trained_steps: number | null;
    parameters: number;
  };
}

export interface SpectrumPayload {
  band_edges: number[];
  rel_log_amp: number[];
}

export interface SamplePayload {
  /** base64-encoded binary PGM images */
  images: string[];
  spectra: SpectrumPayload[];
}

export interface CompareResponse {
  baseline: SamplePayload;
  freeu: SamplePayload;
  timing_ms: number;
}

export interface TrajectoryFrame {
  step: number;
  image: string;
}

export interface TrajectoryResponse {
  steps: number[];
  low_amp: number[];
  high_amp: number[];
  low_delta: number[];
  high_delta: number[];
  frames: TrajectoryFrame[];
}

/** One entry of a FastAPI 422 body. */
export interface ValidationDetail {
  loc: (string | number)[];
  msg: string;
  type?: string;
}
