/** Application wiring: build the control panel from /api/config, debounce
 * slider commits into compare requests, and keep the panels in sync with
 * the newest response only. */

import { ApiClient, ValidationError } from "./api.js";
import { isIdentityConfig, validateStage } from "./limits.js";
import { debounce, RequestGate, SLIDER_DEBOUNCE_MS } from "./requests.js";
import { renderCompare, renderTrajectory, renderValidationError } from "./render.js";
import {
  ConsoleState,
  decodeShareUrl,
  encodeShareUrl,
  initialState,
  replaceTrajectoryCurves,
  setStageValue,
} from "./state.js";

export async function startConsole(root: HTMLElement, api = new ApiClient()): Promise<void> {
  const config = await api.config();
  const health = await api.health();

  let state: ConsoleState = initialState(config.stages, config.freeu);
  const shared = decodeShareUrl(location.hash);
  if (shared) {
    state = {
      ...state,
      seed: shared.seed,
      steps: shared.steps,
      draft: { enabled: true, stages: shared.stages },
    };
  }

  root.innerHTML = `
    <header>
      <h1>sampling console</h1>
      <span class="model-info">${health.model.image_size}×${health.model.image_size},
        ${health.model.schedule_steps}-step schedule,
        ${health.model.parameters.toLocaleString()} parameters</span>
    </header>
    <section id="controls"></section>
    <section id="compare-panel" class="panel"></section>
    <section id="trajectory-panel" class="panel"></section>
  `;
  const controls = root.querySelector<HTMLElement>("#controls")!;
  const comparePanel = root.querySelector<HTMLElement>("#compare-panel")!;
  const trajectoryPanel = root.querySelector<HTMLElement>("#trajectory-panel")!;

  const compareGate = new RequestGate();
  const trajectoryGate = new RequestGate();

  async function runCompare(): Promise<void> {
    const id = compareGate.issue();
    controls.querySelectorAll(".invalid").forEach((el) => el.classList.remove("invalid"));
    try {
      const result = await api.compare({
        seed: state.seed,
        steps: state.steps,
        freeu: state.draft,
      });
      if (!compareGate.shouldRender(id)) return;
      state = { ...state, compareResult: result };
      renderCompare(comparePanel, result, state.seed);
      if (isIdentityConfig(state.draft.stages)) {
        comparePanel.classList.add("identity-config");
      } else {
        comparePanel.classList.remove("identity-config");
      }
    } catch (err) {
      if (!compareGate.shouldRender(id)) return;
      if (err instanceof ValidationError) {
        renderValidationError(controls, err);
      } else {
        comparePanel.textContent = String(err);
      }
    }
  }

  async function runTrajectory(rCutOnly = false): Promise<void> {
    const id = trajectoryGate.issue();
    const rCut = state.trajectory?.rCut ?? 4.0;
    try {
      const response = await api.trajectory({
        seed: state.seed,
        steps: state.steps,
        freeu: state.draft,
        r_cut: rCut,
      });
      if (!trajectoryGate.shouldRender(id)) return;
      state = rCutOnly
        ? replaceTrajectoryCurves(state, response, rCut)
        : {
            ...state,
            trajectory: { response, rCut, frameIndex: 0 },
          };
      const view = state.trajectory!;
      renderTrajectory(trajectoryPanel, view.response, view.rCut, view.frameIndex, (i) => {
        state = { ...state, trajectory: { ...state.trajectory!, frameIndex: i } };
        renderTrajectory(trajectoryPanel, view.response, view.rCut, i);
      });
    } catch (err) {
      if (!trajectoryGate.shouldRender(id)) return;
      trajectoryPanel.textContent = String(err);
    }
  }

  const debouncedCompare = debounce(() => void runCompare(), SLIDER_DEBOUNCE_MS);

  function commitSlider(l: number, field: "b" | "s" | "r_thresh", value: number): void {
    state = setStageValue(state, l, field, value);
    history.replaceState(null, "", encodeShareUrl(state));
    debouncedCompare();
  }

  buildControls(controls, state, {
    onSlider: commitSlider,
    onSeed: (seed) => {
      state = { ...state, seed };
      history.replaceState(null, "", encodeShareUrl(state));
    },
    onSteps: (steps) => {
      state = { ...state, steps };
    },
    onGenerate: () => void runCompare(),
    onTrajectory: () => void runTrajectory(),
    onRCut: (rCut) => {
      if (!state.trajectory) return;
      state = { ...state, trajectory: { ...state.trajectory, rCut } };
      void runTrajectory(true);
    },
  });
}

interface ControlHandlers {
  onSlider: (l: number, field: "b" | "s" | "r_thresh", value: number) => void;
  onSeed: (seed: number) => void;
  onSteps: (steps: number) => void;
  onGenerate: () => void;
  onTrajectory: () => void;
  onRCut: (rCut: number) => void;
}

function buildControls(
  container: HTMLElement,
  state: ConsoleState,
  handlers: ControlHandlers,
): void {
  container.replaceChildren();
  state.draft.stages.forEach((stage, index) => {
    const site = state.sites.find((s) => s.l === stage.l);
    if (!site) return;
    const box = document.createElement("fieldset");
    box.className = "stage-controls";
    const legend = document.createElement("legend");
    legend.textContent = `stage ${stage.l} (${site.size}×${site.size})`;
    box.appendChild(legend);
    const specs: Array<["b" | "s" | "r_thresh", number, number, number, number]> = [
      ["b", 0.5, 2.0, 0.05, stage.b],
      ["s", 0.0, 1.5, 0.05, stage.s],
      ["r_thresh", 0, (site.size / 2) * Math.SQRT2, 0.5, stage.r_thresh],
    ];
    for (const [field, min, max, step, value] of specs) {
      const label = document.createElement("label");
      label.textContent = field;
      const input = document.createElement("input");
      input.type = "range";
      input.min = String(min);
      input.max = String(max);
      input.step = String(step);
      input.value = String(value);
      input.dataset.stageIndex = String(index);
      input.dataset.field = field;
      input.addEventListener("input", () => {
        const proposal = { ...stage, [field]: Number(input.value) };
        input.classList.toggle("invalid", validateStage(proposal, site).length > 0);
        handlers.onSlider(stage.l, field, Number(input.value));
      });
      label.appendChild(input);
      box.appendChild(label);
    }
    container.appendChild(box);
  });

  const seed = document.createElement("input");
  seed.type = "number";
  seed.id = "seed";
  seed.value = String(state.seed);
  seed.addEventListener("change", () => handlers.onSeed(Number(seed.value)));
  container.appendChild(seed);

  const steps = document.createElement("input");
  steps.type = "number";
  steps.id = "steps";
  steps.value = String(state.steps);
  steps.addEventListener("change", () => handlers.onSteps(Number(steps.value)));
  container.appendChild(steps);

  const generate = document.createElement("button");
  generate.id = "generate";
  generate.textContent = "Generate";
  generate.addEventListener("click", handlers.onGenerate);
  container.appendChild(generate);

  const trajectory = document.createElement("button");
  trajectory.id = "trajectory";
  trajectory.textContent = "Trajectory";
  trajectory.addEventListener("click", handlers.onTrajectory);
  container.appendChild(trajectory);

  const rCut = document.createElement("input");
  rCut.type = "number";
  rCut.id = "r-cut";
  rCut.value = "4";
  rCut.addEventListener("change", () => handlers.onRCut(Number(rCut.value)));
  container.appendChild(rCut);
}

// browser entry point (skipped under test)
if (typeof document !== "undefined" && document.getElementById("app")) {
  void startConsole(document.getElementById("app")!);
}
