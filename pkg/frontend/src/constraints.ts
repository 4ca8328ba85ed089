/** Constraint catalogue, draft validation, and transactional submit plans. */

import type { ConstraintOp } from "./api.js";
import type { ConstraintKind, ConstraintRecord } from "./types.js";

export interface KindInfo {
  kind: ConstraintKind;
  label: string;
  needsAxis: boolean;
  needsLevel: boolean;
  needsRebound: boolean;
}

export const CATALOGUE: KindInfo[] = [
  { kind: "lower_bound", label: "Lower bound", needsAxis: false, needsLevel: true, needsRebound: false },
  { kind: "upper_bound", label: "Upper bound", needsAxis: false, needsLevel: true, needsRebound: false },
  { kind: "monotone_increasing", label: "Monotonically increasing", needsAxis: true, needsLevel: false, needsRebound: false },
  { kind: "monotone_decreasing", label: "Monotonically decreasing", needsAxis: true, needsLevel: false, needsRebound: false },
  { kind: "convex", label: "Convex", needsAxis: true, needsLevel: false, needsRebound: false },
  { kind: "concave", label: "Concave", needsAxis: true, needsLevel: false, needsRebound: false },
  { kind: "rebound", label: "Limited rebound", needsAxis: true, needsLevel: false, needsRebound: true },
];

export function defaultDraft(kind: ConstraintKind): ConstraintRecord {
  const info = CATALOGUE.find((k) => k.kind === kind)!;
  return {
    kind,
    axis: info.needsAxis ? 0 : null,
    level: 0,
    rho: 0,
    cap: 0,
    relax: 0,
  };
}

export function validateDraft(record: ConstraintRecord, inputDim: number): string[] {
  const info = CATALOGUE.find((k) => k.kind === record.kind);
  const problems: string[] = [];
  if (!info) {
    problems.push(`unknown constraint kind ${record.kind}`);
    return problems;
  }
  if (info.needsAxis) {
    if (record.axis === null || record.axis < 0 || record.axis >= inputDim) {
      problems.push(`axis must be between 0 and ${inputDim - 1}`);
    }
  } else if (record.axis !== null) {
    problems.push(`${info.label} takes no axis`);
  }
  if (info.needsLevel && !Number.isFinite(record.level)) {
    problems.push("bound level must be a finite number");
  }
  if (info.needsRebound && record.rho < 0) {
    problems.push("rebound factor must be non-negative");
  }
  if (record.relax < 0) {
    problems.push("relaxation must be non-negative");
  }
  return problems;
}

export function describeConstraint(record: ConstraintRecord): string {
  const info = CATALOGUE.find((k) => k.kind === record.kind);
  let base = info ? info.label : record.kind;
  if (info?.needsAxis) base += ` (axis ${record.axis})`;
  if (info?.needsLevel) base += ` = ${record.level}`;
  if (info?.needsRebound) base += ` (factor ${record.rho}, cap ${record.cap})`;
  if (record.relax > 0) base += `, relaxed by ${record.relax}`;
  return base;
}

/** Transactional plan replacing the active set with the draft list, as one
 * operation batch: removals of every active entry (highest index first, so
 * positions stay valid) followed by adds of the whole draft.  The service
 * applies the batch atomically, so the draft is submitted whole or not at
 * all — never partially. */
export function replacementPlan(
  active: ConstraintRecord[],
  draft: ConstraintRecord[],
): ConstraintOp[] {
  const ops: ConstraintOp[] = [];
  for (let i = active.length - 1; i >= 0; i--) {
    ops.push({ op: "remove", index: i });
  }
  for (const record of draft) {
    ops.push({ op: "add", constraint: record });
  }
  return ops;
}
