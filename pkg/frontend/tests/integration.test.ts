/** Client-level tests of the full expert loop against a live service.
 *
 * A real service process is started; the test drives it exactly the way the
 * browser UI does (same api client, state transitions, and chart builders):
 * inspect the initial data-only model, specify constraints, refit, overlay
 * the iterations, audit - and surface a constraint conflict.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { WorkbenchApi } from "../src/api.js";
import { buildSliceView } from "../src/chart.js";
import { defaultDraft, replacementPlan } from "../src/constraints.js";
import * as st from "../src/state.js";
import type { ConstraintRecord, SessionSummary } from "../src/types.js";

const PORT = 8700 + Math.floor(Math.random() * 800);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let workdir: string;
let csvText: string;
const api = new WorkbenchApi(BASE);

const CONFIG = {
  degrees: [1, 2, 1, 1, 1],
  lambda: 0.01,
  delta: 1e-3,
  seed: 0,
  input_ranges: [[0, 1], [0, 1], [0, 1], [0, 1], [0, 1]],
};

function toyConstraints(): ConstraintRecord[] {
  return [
    { ...defaultDraft("monotone_increasing"), axis: 0 },
    { ...defaultDraft("monotone_decreasing"), axis: 1 },
    { ...defaultDraft("convex"), axis: 1 },
    { ...defaultDraft("lower_bound"), level: 0.0 },
    { ...defaultDraft("upper_bound"), level: 1.0 },
  ];
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "workbench-test-"));
  const csvPath = join(workdir, "toy.csv");
  const gen = spawnSync(
    "python3",
    ["-m", "shapereg.cli", "toy-generate", "--n", "30", "--seed", "11", "--out", csvPath],
    { encoding: "utf-8" },
  );
  if (gen.status !== 0) throw new Error(`toy-generate failed: ${gen.stderr}`);
  csvText = readFileSync(csvPath, "utf-8");

  server = spawn(
    "python3",
    ["-m", "shapereg.cli", "serve", "--port", String(PORT),
     "--session-dir", join(workdir, "sessions")],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const deadline = Date.now() + 60_000;
  for (;;) {
    try {
      await api.health();
      break;
    } catch {
      if (Date.now() > deadline) throw new Error("service did not come up");
      await new Promise((r) => setTimeout(r, 300));
    }
  }
});

afterAll(() => {
  server?.kill();
  rmSync(workdir, { recursive: true, force: true });
});

describe("full inspect-specify-refit loop (live service)", () => {
  it("runs end to end with shaded slices, a compliant refit, and a clean audit", async () => {
    // --- create a session from the dataset CSV
    const summary: SessionSummary = await api.createSession(csvText, CONFIG);
    let state = st.sessionLoaded(st.initialState(), summary);
    expect(state.iterations).toEqual([{ number: 0, kind: "ridge", gap: null }]);
    expect(st.currentIteration(state)).toBe(0);

    // --- iteration-0 slices render with distance-shaded projected data
    const anchor = [0.5, 0.5, 0.5, 0.5, 0.5];
    state = st.anchorSelected(state, anchor);
    const slice0 = await api.getSlice(summary.id, 0, 1, anchor, 41);
    const view0 = buildSliceView(slice0);
    expect(view0.curves).toHaveLength(1);
    expect(view0.markers).toHaveLength(30);
    const projected = view0.markers.filter((m) => !m.onAxis);
    expect(projected.length).toBeGreaterThan(0);
    for (const m of projected) {
      expect(m.darkness).toBeGreaterThan(0);
      expect(m.darkness).toBeLessThanOrEqual(1);
    }
    // darkness ordering mirrors distance ordering
    const byDistance = slice0.points
      .map((p, i) => ({ d: p.distance, dark: view0.markers[i].darkness }))
      .filter((_, i) => !view0.markers[i].onAxis)
      .sort((a, b) => a.d - b.d);
    for (let i = 1; i < byDistance.length; i++) {
      expect(byDistance[i].dark).toBeLessThanOrEqual(byDistance[i - 1].dark + 1e-12);
    }

    // --- specify the shape knowledge (whole-draft submit) and refit
    for (const record of toyConstraints()) state = st.draftAdded(state, record);
    const plan = replacementPlan(state.activeConstraints, state.draftConstraints);
    const accepted = await api.updateConstraints(summary.id, plan);
    expect(accepted.constraints).toHaveLength(5);
    state = st.draftSubmitted(state, accepted.constraints);

    await api.refit(summary.id);
    state = st.refitStarted(state);
    expect(st.canMutate(state)).toBe(false);
    expect(st.currentIteration(state)).toBe(0); // never a stale "current" model
    const done = await api.waitForJob(summary.id);
    expect(done.status).toBe("idle");
    state = st.jobUpdated(state, done.status, done.failure);
    state = st.sessionLoaded(state, await api.getSession(summary.id));
    expect(state.iterations).toHaveLength(2);
    expect(st.currentIteration(state)).toBe(1);

    // --- iteration-1 overlay: previous curve dashed under the compliant one
    const slice1 = await api.getSlice(summary.id, 1, 1, anchor, 41);
    const overlayView = buildSliceView(slice1, slice0);
    expect(overlayView.curves.map((c) => c.cssClass)).toEqual([
      "curve-previous",
      "curve-current",
    ]);
    // the refit model obeys "monotonically decreasing along axis 2"
    const ys = slice1.curve.map((p) => p.yhat);
    for (let i = 1; i < ys.length; i++) {
      expect(ys[i]).toBeLessThanOrEqual(ys[i - 1] + 1e-7);
    }

    // --- the audit endpoint confirms zero violations
    const audit = await api.audit(summary.id, 1, 0, 2000, 50);
    expect(audit.n_constraints).toBe(5);
    expect(audit.total_violated).toBe(0);
  });

  it("surfaces contradictory constraints as a failed refit with both named", async () => {
    const summary = await api.createSession(csvText, CONFIG);
    let state = st.sessionLoaded(st.initialState(), summary);

    state = st.draftAdded(state, { ...defaultDraft("lower_bound"), level: 1.0 });
    state = st.draftAdded(state, { ...defaultDraft("upper_bound"), level: 0.0 });
    const accepted = await api.updateConstraints(
      summary.id,
      replacementPlan(state.activeConstraints, state.draftConstraints),
    );
    state = st.draftSubmitted(state, accepted.constraints);

    await api.refit(summary.id);
    state = st.refitStarted(state);
    const done = await api.waitForJob(summary.id);
    expect(done.status).toBe("failed");
    expect(done.failure?.code).toBe("not_strictly_feasible");

    // the UI highlights exactly the constraints the certificate names
    state = st.jobUpdated(state, done.status, done.failure);
    expect(state.highlightedConstraints).toContain(0);
    expect(state.highlightedConstraints).toContain(1);
    expect(done.failure?.constraints?.length).toBeGreaterThanOrEqual(2);
    // no phantom iteration was appended
    const after = await api.getSession(summary.id);
    expect(after.iterations).toHaveLength(1);
    // the session recovers: drop the clash and refit cleanly
    state = st.draftRemoved(state, 1);
    state = st.draftRemoved(state, 0);
    await api.updateConstraints(
      summary.id,
      replacementPlan(state.activeConstraints, state.draftConstraints),
    );
    await api.refit(summary.id);
    expect((await api.waitForJob(summary.id)).status).toBe("idle");
  });
});
