/** Wire types for the workbench service payloads. */

export type ConstraintKind =
  | "lower_bound"
  | "upper_bound"
  | "monotone_increasing"
  | "monotone_decreasing"
  | "convex"
  | "concave"
  | "rebound";

export interface ConstraintRecord {
  kind: ConstraintKind;
  axis: number | null;
  level: number;
  rho: number;
  cap: number;
  relax: number;
}

export interface IterationInfo {
  number: number;
  kind: "ridge" | "adaptive" | "grid";
  gap: number | null;
}

export interface SessionSummary {
  id: string;
  status: "idle" | "fitting" | "failed";
  failure: FailureInfo | null;
  n_points: number;
  columns: string[];
  input_ranges: [number, number][];
  config: Record<string, unknown>;
  constraints: ConstraintRecord[];
  iterations: IterationInfo[];
}

export interface FailureInfo {
  code: string;
  message: string;
  constraint_indices?: number[];
  constraints?: string[];
}

export interface SlicePoint {
  t: number;
  y: number;
  distance: number;
  on_axis: boolean;
}

export interface SlicePayload {
  iteration: number;
  axis: number;
  axis_name: string;
  anchor: number[];
  extrapolation: boolean;
  curve: { t: number; yhat: number }[];
  points: SlicePoint[];
}

export interface AnchorSuggestion {
  point: number[];
  cube: number[];
  distance: number;
}

export interface AnchorsPayload {
  high_fidelity: AnchorSuggestion[];
  low_fidelity: AnchorSuggestion[];
}

export interface JobStatus {
  status: "idle" | "fitting" | "failed";
  failure: FailureInfo | null;
  iterations: number;
}

export interface AuditEntry {
  index: number;
  violated: boolean;
  worst_point: number[];
  worst_value: number;
  violating_fraction: number;
}

export interface AuditPayload {
  total_violated: number;
  n_constraints: number;
  per_constraint: AuditEntry[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  [key: string]: unknown;
}
