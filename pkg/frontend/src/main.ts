/** Browser entry point: wires the pure modules to the DOM.
 *
 * Layout: session setup, anchor picker (suggested high/low-fidelity points
 * plus manual entry), one slice chart per input axis at the chosen anchor
 * (with optional before/after overlay), the constraint panel, and the
 * iteration history with job status.
 */

import { ApiError, WorkbenchApi } from "./api.js";
import { buildSliceView, renderPlaceholder, renderSliceSvg } from "./chart.js";
import {
  CATALOGUE,
  defaultDraft,
  describeConstraint,
  replacementPlan,
  validateDraft,
} from "./constraints.js";
import * as st from "./state.js";
import type { ConstraintKind, ConstraintRecord, SlicePayload } from "./types.js";

const api = new WorkbenchApi("");
let state = st.initialState();
let overlayEnabled = true;
let pollTimer: number | null = null;

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function setState(next: st.WorkbenchState): void {
  state = next;
  render();
}

async function refreshSession(): Promise<void> {
  if (!state.sessionId) return;
  const summary = await api.getSession(state.sessionId);
  setState(st.sessionLoaded(state, summary));
}

// ---------------------------------------------------------------------------
// session setup

async function createSession(): Promise<void> {
  const csv = ($("csv-input") as HTMLTextAreaElement).value;
  const degrees = ($("degrees-input") as HTMLInputElement).value
    .split(",")
    .map((t) => parseInt(t.trim(), 10));
  const lambda = parseFloat(($("lambda-input") as HTMLInputElement).value);
  const delta = parseFloat(($("delta-input") as HTMLInputElement).value);
  const status = $("setup-status");
  status.textContent = "creating session...";
  try {
    const summary = await api.createSession(csv, { degrees, lambda, delta });
    setState(st.sessionLoaded(st.initialState(), summary));
    const mid = summary.input_ranges.map(([lo, hi]) => (lo + hi) / 2);
    setState(st.anchorSelected(state, mid));
    status.textContent = `session ${summary.id} (${summary.n_points} points)`;
    $("setup-panel").classList.add("collapsed");
    await loadAnchors();
    await renderSlices();
  } catch (err) {
    status.textContent = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  }
}

// ---------------------------------------------------------------------------
// anchors

async function loadAnchors(): Promise<void> {
  if (!state.sessionId) return;
  const payload = await api.getAnchors(state.sessionId, 5);
  const render = (list: typeof payload.high_fidelity, label: string) =>
    list
      .map(
        (a, i) =>
          `<button class="anchor-chip" data-kind="${label}" data-index="${i}" title="distance ${a.distance.toFixed(3)}">` +
          `${label} ${i + 1}</button>`,
      )
      .join(" ");
  $("anchor-suggestions").innerHTML =
    `<div><span class="anchor-group">near data:</span> ${render(payload.high_fidelity, "high")}</div>` +
    `<div><span class="anchor-group">far from data:</span> ${render(payload.low_fidelity, "low")}</div>`;
  $("anchor-suggestions")
    .querySelectorAll<HTMLButtonElement>("button.anchor-chip")
    .forEach((btn) => {
      btn.addEventListener("click", () => {
        const list = btn.dataset.kind === "high" ? payload.high_fidelity : payload.low_fidelity;
        const chosen = list[parseInt(btn.dataset.index!, 10)];
        setState(st.anchorSelected(state, chosen.point));
        void renderSlices();
      });
    });
}

function applyManualAnchor(): void {
  const raw = ($("anchor-input") as HTMLInputElement).value;
  const coords = raw.split(",").map((t) => parseFloat(t.trim()));
  if (coords.length !== st.inputDim(state) || coords.some((v) => !Number.isFinite(v))) {
    $("anchor-warning").textContent = `anchor needs ${st.inputDim(state)} numbers`;
    return;
  }
  $("anchor-warning").textContent = st.anchorOutOfRange(state, coords)
    ? "outside the training ranges - slices will extrapolate"
    : "";
  setState(st.anchorSelected(state, coords));
  void renderSlices();
}

// ---------------------------------------------------------------------------
// slices

async function renderSlices(): Promise<void> {
  const host = $("slice-grid");
  if (!state.sessionId || !state.anchor) {
    host.innerHTML = renderPlaceholder("create a session and pick an anchor");
    return;
  }
  const iteration = st.currentIteration(state);
  if (iteration === null) return;
  const previous = overlayEnabled && iteration > 0 ? iteration - 1 : null;
  const cells: string[] = [];
  for (let axis = 0; axis < st.inputDim(state); axis++) {
    try {
      const primary = await api.getSlice(state.sessionId, iteration, axis, state.anchor);
      let overlay: SlicePayload | null = null;
      if (previous !== null) {
        overlay = await api.getSlice(state.sessionId, previous, axis, state.anchor);
      }
      const view = buildSliceView(primary, overlay);
      cells.push(`<figure class="slice-cell">${renderSliceSvg(view)}</figure>`);
    } catch (err) {
      cells.push(
        `<figure class="slice-cell">${renderPlaceholder(
          err instanceof ApiError ? err.message : "slice unavailable",
        )}</figure>`,
      );
    }
  }
  host.innerHTML = cells.join("");
  host.querySelectorAll<HTMLButtonElement>("button[data-action=retry]").forEach((b) =>
    b.addEventListener("click", () => void renderSlices()),
  );
}

// ---------------------------------------------------------------------------
// constraint panel

function renderConstraintPanel(): void {
  const list = $("constraint-list");
  list.innerHTML = state.draftConstraints
    .map((c, i) => {
      const highlighted = state.highlightedConstraints.includes(i) ? " conflicting" : "";
      return (
        `<li class="constraint-item${highlighted}">` +
        `<span>${describeConstraint(c)}</span>` +
        `<label class="relax">relax <input type="range" min="0" max="0.1" step="0.001" value="${c.relax}" data-index="${i}" ${st.canMutate(state) ? "" : "disabled"}/>` +
        `<span class="relax-value">${c.relax.toFixed(3)}</span></label>` +
        `<button data-remove="${i}" ${st.canMutate(state) ? "" : "disabled"}>remove</button></li>`
      );
    })
    .join("");
  list.querySelectorAll<HTMLButtonElement>("button[data-remove]").forEach((btn) =>
    btn.addEventListener("click", () => {
      setState(st.draftRemoved(state, parseInt(btn.dataset.remove!, 10)));
    }),
  );
  list.querySelectorAll<HTMLInputElement>("input[type=range]").forEach((slider) =>
    slider.addEventListener("change", () => {
      const i = parseInt(slider.dataset.index!, 10);
      const edited = { ...state.draftConstraints[i], relax: parseFloat(slider.value) };
      setState(st.draftEdited(state, i, edited));
    }),
  );

  const kindSelect = $("kind-select") as HTMLSelectElement;
  const info = CATALOGUE.find((k) => k.kind === (kindSelect.value as ConstraintKind));
  $("axis-field").style.display = info?.needsAxis ? "inline-block" : "none";
  $("level-field").style.display = info?.needsLevel ? "inline-block" : "none";
  $("rebound-fields").style.display = info?.needsRebound ? "inline-block" : "none";

  const busy = !st.canMutate(state);
  ($("add-constraint") as HTMLButtonElement).disabled = busy;
  ($("submit-constraints") as HTMLButtonElement).disabled = busy;
  ($("submit-refit") as HTMLButtonElement).disabled = busy;
}

function addDraftFromForm(): void {
  const kind = ($("kind-select") as HTMLSelectElement).value as ConstraintKind;
  const record: ConstraintRecord = {
    ...defaultDraft(kind),
    axis: CATALOGUE.find((k) => k.kind === kind)?.needsAxis
      ? parseInt(($("axis-input") as HTMLInputElement).value, 10)
      : null,
    level: parseFloat(($("level-input") as HTMLInputElement).value) || 0,
    rho: parseFloat(($("rho-input") as HTMLInputElement).value) || 0,
    cap: parseFloat(($("cap-input") as HTMLInputElement).value) || 0,
  };
  const problems = validateDraft(record, st.inputDim(state));
  $("constraint-errors").textContent = problems.join("; ");
  if (problems.length === 0) {
    setState(st.draftAdded(state, record));
  }
}

async function submitConstraints(refitAfter: boolean): Promise<void> {
  if (!state.sessionId || !st.canMutate(state)) return;
  const problems = state.draftConstraints.flatMap((c) => validateDraft(c, st.inputDim(state)));
  $("constraint-errors").textContent = problems.join("; ");
  if (problems.length) return;
  try {
    const result = await api.updateConstraints(
      state.sessionId,
      replacementPlan(state.activeConstraints, state.draftConstraints),
    );
    setState(st.draftSubmitted(state, result.constraints));
    if (refitAfter) await startRefit();
  } catch (err) {
    $("constraint-errors").textContent =
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  }
}

// ---------------------------------------------------------------------------
// refit + history

async function startRefit(): Promise<void> {
  if (!state.sessionId) return;
  try {
    await api.refit(state.sessionId);
    setState(st.refitStarted(state));
    pollJob();
  } catch (err) {
    $("job-status").textContent =
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  }
}

function pollJob(): void {
  if (pollTimer !== null) window.clearTimeout(pollTimer);
  const tick = async () => {
    if (!state.sessionId) return;
    const status = await api.jobStatus(state.sessionId);
    setState(st.jobUpdated(state, status.status, status.failure));
    if (status.status === "fitting") {
      pollTimer = window.setTimeout(tick, 700);
    } else {
      await refreshSession();
      await renderSlices();
    }
  };
  void tick();
}

function renderHistory(): void {
  const host = $("history-bar");
  const current = st.currentIteration(state);
  host.innerHTML = state.iterations
    .map(
      (it) =>
        `<button class="iteration-chip${it.number === current ? " current" : ""}" data-iter="${it.number}">` +
        `#${it.number} ${it.kind}${it.gap !== null ? ` (gap ${Number(it.gap).toExponential(1)})` : ""}</button>`,
    )
    .join("");
  host.querySelectorAll<HTMLButtonElement>("button[data-iter]").forEach((btn) =>
    btn.addEventListener("click", () => {
      setState(st.iterationSelected(state, parseInt(btn.dataset.iter!, 10)));
      void renderSlices();
    }),
  );
}

async function runAudit(): Promise<void> {
  if (!state.sessionId) return;
  const iteration = st.currentIteration(state);
  if (iteration === null) return;
  $("audit-result").textContent = "auditing...";
  const audit = await api.audit(state.sessionId, iteration, 0, 2000, 50);
  $("audit-result").textContent =
    `iteration ${iteration}: ${audit.total_violated} of ${audit.n_constraints} constraints violated`;
}

// ---------------------------------------------------------------------------
// top-level render

function render(): void {
  const job = $("job-status");
  if (state.jobStatus === "fitting") {
    job.textContent = "refit running...";
  } else if (state.jobStatus === "failed" && state.failure) {
    const names = state.failure.constraints?.join("; ") ?? "";
    job.textContent = `refit failed: ${state.failure.message}${names ? ` [${names}]` : ""}`;
  } else {
    job.textContent = `idle - ${state.iterations.length} iteration(s)`;
  }
  renderConstraintPanel();
  renderHistory();
}

function bind(): void {
  $("create-session").addEventListener("click", () => void createSession());
  $("apply-anchor").addEventListener("click", applyManualAnchor);
  $("add-constraint").addEventListener("click", addDraftFromForm);
  $("submit-constraints").addEventListener("click", () => void submitConstraints(false));
  $("submit-refit").addEventListener("click", () => void submitConstraints(true));
  $("run-audit").addEventListener("click", () => void runAudit());
  $("overlay-toggle").addEventListener("change", (e) => {
    overlayEnabled = (e.target as HTMLInputElement).checked;
    void renderSlices();
  });
  const kindSelect = $("kind-select") as HTMLSelectElement;
  kindSelect.innerHTML = CATALOGUE.map(
    (k) => `<option value="${k.kind}">${k.label}</option>`,
  ).join("");
  kindSelect.addEventListener("change", renderConstraintPanel);
  render();
}

document.addEventListener("DOMContentLoaded", bind);
