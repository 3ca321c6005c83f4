/** Payload shapes of the annotation service API (schema "v1"). */

export interface Suggestion {
  slot: string;
  probability: number;
}

export interface SpanRef {
  start: number;
  len: number;
}

export interface TaskView {
  schema: string;
  task_id: string;
  span_id: string;
  tokens: string[];
  span: SpanRef;
  weak_label: string | null;
  suggestions: Suggestion[];
  status: string;
  lease_expiry: number | null;
}

export interface BatchResponse {
  schema: string;
  phase: string;
  iteration: number;
  tasks: TaskView[];
}

export interface ProgressResponse {
  schema: string;
  labeled_fraction: number;
  iteration: number;
  known_slot_count: number;
  batch_completion: number;
  latest_span_f1: number;
  phase: string;
}

export interface CurveRow {
  iteration: number;
  labeled_fraction: number;
  span_f1: number;
  known_slots: number;
  new_slots_discovered: number;
}

export interface CurveResponse {
  schema: string;
  curve: CurveRow[];
}

export interface SlotEntry {
  name: string;
  known: boolean;
  discovered_iteration: number | null;
}

export interface PendingSlot {
  name: string;
  description: string;
}

export interface SlotsResponse {
  schema: string;
  slots: SlotEntry[];
  pending: PendingSlot[];
}

export interface SubmitResponse {
  schema: string;
  task_id: string;
  status: string;
  phase: string;
}

export interface DeclareResponse {
  schema: string;
  name: string;
  created: boolean;
  status: string;
}

/** Exactly one of these per card; submitted cards become read-only. */
export type CardDecision =
  | { kind: "existing"; slot: string }
  | { kind: "new"; name: string; description: string }
  | { kind: "skip" };
