/** Workbench state and its pure transition functions.
 *
 * The browser layer dispatches these transitions and re-renders; keeping
 * them pure makes the session invariants testable:
 *  - the constraint draft is only ever submitted whole;
 *  - while a refit runs, the "current" iteration keeps pointing at the last
 *    completed model, never a stale or phantom one;
 *  - after a failed refit the conflicting constraints named by the service
 *    are highlighted.
 */

import type {
  ConstraintRecord,
  FailureInfo,
  IterationInfo,
  SessionSummary,
} from "./types.js";

export interface WorkbenchState {
  sessionId: string | null;
  columns: string[];
  inputRanges: [number, number][];
  iterations: IterationInfo[];
  selectedIteration: number | null;
  comparisonPair: [number, number] | null;
  anchor: number[] | null;
  selectedAxis: number;
  activeConstraints: ConstraintRecord[];
  draftConstraints: ConstraintRecord[];
  draftDirty: boolean;
  jobStatus: "idle" | "fitting" | "failed";
  failure: FailureInfo | null;
  highlightedConstraints: number[];
}

export function initialState(): WorkbenchState {
  return {
    sessionId: null,
    columns: [],
    inputRanges: [],
    iterations: [],
    selectedIteration: null,
    comparisonPair: null,
    anchor: null,
    selectedAxis: 0,
    activeConstraints: [],
    draftConstraints: [],
    draftDirty: false,
    jobStatus: "idle",
    failure: null,
    highlightedConstraints: [],
  };
}

export function inputDim(state: WorkbenchState): number {
  return state.inputRanges.length;
}

/** The iteration whose model the UI treats as current: the selected one, or
 * the newest completed one.  While a refit is running this never advances,
 * so a stale in-progress model can never be displayed as current. */
export function currentIteration(state: WorkbenchState): number | null {
  if (state.selectedIteration !== null) return state.selectedIteration;
  if (!state.iterations.length) return null;
  return state.iterations[state.iterations.length - 1].number;
}

export function sessionLoaded(state: WorkbenchState, summary: SessionSummary): WorkbenchState {
  const keepDraft = state.draftDirty && state.sessionId === summary.id;
  return {
    ...state,
    sessionId: summary.id,
    columns: summary.columns,
    inputRanges: summary.input_ranges,
    iterations: summary.iterations,
    activeConstraints: summary.constraints,
    draftConstraints: keepDraft ? state.draftConstraints : summary.constraints.slice(),
    draftDirty: keepDraft,
    jobStatus: summary.status,
    failure: summary.failure,
    highlightedConstraints: highlightsFrom(summary.failure),
  };
}

function highlightsFrom(failure: FailureInfo | null): number[] {
  if (!failure || !failure.constraint_indices) return [];
  return [...failure.constraint_indices].sort((a, b) => a - b);
}

export function iterationSelected(state: WorkbenchState, k: number | null): WorkbenchState {
  if (k !== null && !state.iterations.some((it) => it.number === k)) return state;
  return { ...state, selectedIteration: k };
}

export function comparisonChosen(
  state: WorkbenchState,
  pair: [number, number] | null,
): WorkbenchState {
  if (pair) {
    const known = (n: number) => state.iterations.some((it) => it.number === n);
    if (!known(pair[0]) || !known(pair[1])) return state;
  }
  return { ...state, comparisonPair: pair };
}

export function anchorSelected(state: WorkbenchState, anchor: number[]): WorkbenchState {
  if (anchor.length !== inputDim(state)) return state;
  return { ...state, anchor: anchor.slice() };
}

export function axisSelected(state: WorkbenchState, axis: number): WorkbenchState {
  if (axis < 0 || axis >= inputDim(state)) return state;
  return { ...state, selectedAxis: axis };
}

/** True when the manually entered anchor leaves the training ranges; such
 * anchors are allowed but flagged as extrapolation. */
export function anchorOutOfRange(state: WorkbenchState, anchor: number[]): boolean {
  return anchor.some(
    (v, j) => v < state.inputRanges[j][0] || v > state.inputRanges[j][1],
  );
}

export function draftAdded(state: WorkbenchState, record: ConstraintRecord): WorkbenchState {
  return {
    ...state,
    draftConstraints: [...state.draftConstraints, record],
    draftDirty: true,
  };
}

export function draftRemoved(state: WorkbenchState, index: number): WorkbenchState {
  if (index < 0 || index >= state.draftConstraints.length) return state;
  const draft = state.draftConstraints.slice();
  draft.splice(index, 1);
  return { ...state, draftConstraints: draft, draftDirty: true };
}

export function draftEdited(
  state: WorkbenchState,
  index: number,
  record: ConstraintRecord,
): WorkbenchState {
  if (index < 0 || index >= state.draftConstraints.length) return state;
  const draft = state.draftConstraints.slice();
  draft[index] = record;
  return { ...state, draftConstraints: draft, draftDirty: true };
}

/** After the whole draft was accepted by the service. */
export function draftSubmitted(
  state: WorkbenchState,
  accepted: ConstraintRecord[],
): WorkbenchState {
  return {
    ...state,
    activeConstraints: accepted,
    draftConstraints: accepted.slice(),
    draftDirty: false,
    highlightedConstraints: [],
  };
}

export function refitStarted(state: WorkbenchState): WorkbenchState {
  return { ...state, jobStatus: "fitting", failure: null, highlightedConstraints: [] };
}

export function jobUpdated(
  state: WorkbenchState,
  status: "idle" | "fitting" | "failed",
  failure: FailureInfo | null,
): WorkbenchState {
  return {
    ...state,
    jobStatus: status,
    failure,
    highlightedConstraints: highlightsFrom(failure),
  };
}

/** Mutations are disabled while the session is fitting. */
export function canMutate(state: WorkbenchState): boolean {
  return state.jobStatus !== "fitting";
}
