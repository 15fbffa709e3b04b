/** Thin typed client for the sampling service. */

import type {
  CompareResponse,
  ConfigResponse,
  FreeUConfigBody,
  HealthResponse,
  TrajectoryResponse,
  ValidationDetail,
} from "./types.js";

/** A 422 from the server, with field-level details preserved. */
export class ValidationError extends Error {
  readonly details: ValidationDetail[];

  constructor(details: ValidationDetail[]) {
    super(details.map((d) => `${d.loc.join(".")}: ${d.msg}`).join("; "));
    this.name = "ValidationError";
    this.details = details;
  }

  /** The offending stage field ("b" | "s" | "r_thresh" | ...) of the first
   * detail that points into the freeu stages, if any. */
  firstStageField(): { stageIndex: number; field: string } | undefined {
    for (const d of this.details) {
      const i = d.loc.findIndex((part) => part === "stages");
      if (i >= 0 && i + 2 < d.loc.length) {
        return {
          stageIndex: Number(d.loc[i + 1]),
          field: String(d.loc[i + 2]),
        };
      }
    }
    return undefined;
  }
}

export class ServiceError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ServiceError";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, init);
  if (resp.status === 422) {
    const body = (await resp.json()) as { detail: ValidationDetail[] };
    throw new ValidationError(body.detail);
  }
  if (!resp.ok) {
    throw new ServiceError(resp.status, `${resp.status} ${await resp.text()}`);
  }
  return (await resp.json()) as T;
}

function post<T>(url: string, body: unknown): Promise<T> {
  return request<T>(url, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  health(): Promise<HealthResponse> {
    return request(`${this.baseUrl}/api/health`);
  }

  config(): Promise<ConfigResponse> {
    return request(`${this.baseUrl}/api/config`);
  }

  compare(body: {
    seed: number;
    steps: number;
    freeu: FreeUConfigBody;
    bands?: number;
  }): Promise<CompareResponse> {
    return post(`${this.baseUrl}/api/compare`, body);
  }

  trajectory(body: {
    seed: number;
    steps: number;
    freeu: FreeUConfigBody;
    r_cut?: number;
    max_frames?: number;
  }): Promise<TrajectoryResponse> {
    return post(`${this.baseUrl}/api/trajectory`, body);
  }
}
