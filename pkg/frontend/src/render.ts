/** DOM rendering for the two panels.
 *
 * All numbers and pixels shown come from a single server response; the
 * only arithmetic here is mapping values onto chart coordinates.
 */

import { decodePgm } from "./pgm.js";
import type {
  CompareResponse,
  SpectrumPayload,
  TrajectoryResponse,
} from "./types.js";
import type { ValidationError } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";

// ---------------------------------------------------------------------------
// images

/** Render a grayscale image; uses a canvas when available (browser),
 * otherwise a placeholder carrying the decoded dimensions (tests). */
export function renderImage(b64: string, scale = 4): HTMLElement {
  const img = decodePgm(b64);
  const canvas = document.createElement("canvas");
  canvas.width = img.width * scale;
  canvas.height = img.height * scale;
  canvas.className = "sample-image";
  canvas.dataset.width = String(img.width);
  canvas.dataset.height = String(img.height);
  let ctx: CanvasRenderingContext2D | null = null;
  try {
    ctx = canvas.getContext("2d");
  } catch {
    ctx = null; // non-browser DOM (tests) has no canvas backend
  }
  if (ctx) {
    for (let y = 0; y < img.height; y++) {
      for (let x = 0; x < img.width; x++) {
        const v = img.pixels[y * img.width + x] ?? 0;
        ctx.fillStyle = `rgb(${v},${v},${v})`;
        ctx.fillRect(x * scale, y * scale, scale, scale);
      }
    }
  }
  return canvas;
}

// ---------------------------------------------------------------------------
// spectrum chart

export interface ChartSeries {
  label: string;
  spectrum: SpectrumPayload;
}

/** Line chart of band profiles; bands whose values differ between the two
 * series are marked with a `delta-band` tick. */
export function spectrumChart(
  series: ChartSeries[],
  width = 320,
  height = 160,
): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "spectrum-chart");
  const values = series.flatMap((s) => s.spectrum.rel_log_amp);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  const n = series[0]?.spectrum.rel_log_amp.length ?? 0;
  const xAt = (k: number) => (n > 1 ? (k / (n - 1)) * (width - 20) + 10 : width / 2);
  const yAt = (v: number) => height - 12 - ((v - lo) / span) * (height - 24);

  for (const [i, s] of series.entries()) {
    const line = document.createElementNS(SVG_NS, "polyline");
    line.setAttribute(
      "points",
      s.spectrum.rel_log_amp.map((v, k) => `${xAt(k)},${yAt(v)}`).join(" "),
    );
    line.setAttribute("fill", "none");
    line.setAttribute("class", `series series-${i}`);
    line.setAttribute("data-label", s.label);
    svg.appendChild(line);
  }

  if (series.length === 2) {
    const [a, b] = series;
    a!.spectrum.rel_log_amp.forEach((v, k) => {
      const w = b!.spectrum.rel_log_amp[k];
      if (w !== undefined && w !== v) {
        const tick = document.createElementNS(SVG_NS, "line");
        tick.setAttribute("x1", String(xAt(k)));
        tick.setAttribute("x2", String(xAt(k)));
        tick.setAttribute("y1", String(yAt(v)));
        tick.setAttribute("y2", String(yAt(w)));
        tick.setAttribute("class", "delta-band");
        tick.setAttribute("data-band", String(k));
        svg.appendChild(tick);
      }
    });
  }
  return svg;
}

// ---------------------------------------------------------------------------
// compare panel

function payloadsIdentical(result: CompareResponse): boolean {
  return (
    JSON.stringify(result.baseline.images) === JSON.stringify(result.freeu.images) &&
    JSON.stringify(result.baseline.spectra) === JSON.stringify(result.freeu.spectra)
  );
}

/** Side-by-side baseline (left) / modulated (right) view with a shared-seed
 * badge, per-pair spectrum chart, and an "identical output" flag when the
 * two payloads match exactly. */
export function renderCompare(
  container: HTMLElement,
  result: CompareResponse,
  seed: number,
): void {
  container.replaceChildren();
  const badge = document.createElement("div");
  badge.className = "seed-badge";
  badge.textContent = `seed ${seed}`;
  container.appendChild(badge);

  if (payloadsIdentical(result)) {
    const flag = document.createElement("div");
    flag.className = "identical-flag";
    flag.textContent = "identical output — settings are an exact no-op";
    container.appendChild(flag);
  }

  const n = Math.min(result.baseline.images.length, result.freeu.images.length);
  for (let i = 0; i < n; i++) {
    const row = document.createElement("div");
    row.className = "compare-row";
    const left = document.createElement("figure");
    left.className = "pane pane-baseline";
    left.appendChild(renderImage(result.baseline.images[i]!));
    const leftCap = document.createElement("figcaption");
    leftCap.textContent = "baseline";
    left.appendChild(leftCap);
    const right = document.createElement("figure");
    right.className = "pane pane-freeu";
    right.appendChild(renderImage(result.freeu.images[i]!));
    const rightCap = document.createElement("figcaption");
    rightCap.textContent = "modulated";
    right.appendChild(rightCap);
    row.append(left, right);
    container.appendChild(row);

    const chart = spectrumChart([
      { label: "baseline", spectrum: result.baseline.spectra[i]! },
      { label: "modulated", spectrum: result.freeu.spectra[i]! },
    ]);
    container.appendChild(chart);
  }
}

/** Outline the offending slider and show the server's message. */
export function renderValidationError(
  container: HTMLElement,
  error: ValidationError,
): void {
  const target = error.firstStageField();
  if (target) {
    const input = container.querySelector<HTMLElement>(
      `[data-stage-index="${target.stageIndex}"][data-field="${target.field}"]`,
    );
    input?.classList.add("invalid");
  }
  const msg = document.createElement("div");
  msg.className = "server-error";
  msg.textContent = error.message;
  container.appendChild(msg);
}

// ---------------------------------------------------------------------------
// trajectory panel

/** Step-scrubbable trajectory view: band curves (exactly one point per
 * sampling step) plus the frame selected by the slider. A single-frame
 * trajectory disables the slider. */
export function renderTrajectory(
  container: HTMLElement,
  response: TrajectoryResponse,
  rCut: number,
  frameIndex: number,
  onScrub?: (index: number) => void,
): void {
  container.replaceChildren();

  const curves = spectrumChartFromTrajectory(response);
  curves.setAttribute("data-r-cut", String(rCut));
  container.appendChild(curves);

  const slider = document.createElement("input");
  slider.type = "range";
  slider.className = "frame-slider";
  slider.min = "0";
  slider.max = String(Math.max(0, response.frames.length - 1));
  slider.value = String(frameIndex);
  slider.disabled = response.frames.length <= 1;
  if (onScrub) {
    slider.addEventListener("input", () => onScrub(Number(slider.value)));
  }
  container.appendChild(slider);

  const frame = response.frames[Math.min(frameIndex, response.frames.length - 1)];
  if (frame) {
    const fig = document.createElement("figure");
    fig.className = "trajectory-frame";
    fig.appendChild(renderImage(frame.image));
    const cap = document.createElement("figcaption");
    cap.textContent = `step ${frame.step}`;
    fig.appendChild(cap);
    container.appendChild(fig);
  }
}

function spectrumChartFromTrajectory(
  response: TrajectoryResponse,
  width = 360,
  height = 160,
): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "trajectory-chart");
  const all = [...response.low_amp, ...response.high_amp];
  const lo = Math.min(...all);
  const hi = Math.max(...all);
  const span = hi - lo || 1;
  const n = response.steps.length;
  const xAt = (k: number) => (n > 1 ? (k / (n - 1)) * (width - 20) + 10 : width / 2);
  const yAt = (v: number) => height - 12 - ((v - lo) / span) * (height - 24);
  for (const [cls, data] of [
    ["band-low", response.low_amp],
    ["band-high", response.high_amp],
  ] as const) {
    const line = document.createElementNS(SVG_NS, "polyline");
    line.setAttribute("points", data.map((v, k) => `${xAt(k)},${yAt(v)}`).join(" "));
    line.setAttribute("fill", "none");
    line.setAttribute("class", cls);
    line.setAttribute("data-points", String(data.length));
    svg.appendChild(line);
  }
  return svg;
}
