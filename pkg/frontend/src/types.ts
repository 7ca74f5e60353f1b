/** Wire types of the annotation service protocol. */

export interface SessionInfo {
  session_id: string;
  num_classes: number;
  class_names: string[];
  batch_index: number;
  timeout_s: number;
}

export interface Hint {
  label: number;
  name: string;
  prob: number;
}

export interface PendingRequest {
  sample_id: number;
  point: [number, number];
  background: [number, number][];
  top3: Hint[];
  batch_index: number;
}

export interface Progress {
  labeled: number;
  pending: number;
  batch_index: number;
  overall_error_so_far: number;
  finished: boolean;
}

export type SubmitOutcome =
  | { kind: "accepted" }
  | { kind: "duplicate" }
  | { kind: "invalid"; message: string }
  | { kind: "failed"; message: string };
