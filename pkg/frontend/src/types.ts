/** Wire types mirrored from the service JSON responses. */

export interface ProjectionPoint {
  id: number;
  x: number;
  y: number;
  label: string;
}

export interface NeighborRow {
  id: number;
  text: string;
  label: string;
  distance: number;
}

export interface ExplanationNeighbor extends NeighborRow {
  agrees_with_prediction: boolean;
}

export interface Explanation {
  query_text: string;
  predicted_label: string;
  true_label: string | null;
  k: number;
  votes: Record<string, number>;
  neighbors: ExplanationNeighbor[];
}

export interface ClassifyResponse {
  prediction: { label: string; k: number; votes: Record<string, number> };
  explanation: Explanation;
  index_size: number;
}

export interface Meta {
  index_size: number;
  dim: number;
  k: number;
  vocab: string[];
  n_texts: number;
}

export interface AnomalyFlag {
  kind: string;
  doc_ids: number[];
  evidence: Record<string, unknown>;
}
