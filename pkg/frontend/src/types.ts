// Wire types mirroring the service's JSON payloads. The console never
// computes theta or SE itself; everything below arrives from the server.

export interface PoolInfo {
  name: string;
  items: number;
  concepts: Record<string, number>;
  humans: number;
}

export interface QuestionView {
  id: string;
  content: string | null;
}

export interface TrajectoryPoint {
  step: number;
  question_id: string;
  correct: number;
  theta: number;
  se: number | null;
}

export interface ConceptRow {
  concept: string | null;
  theta: number;
  normalized_theta: number;
  se: number | null;
  items_used: number;
}

export interface Report {
  per_concept: ConceptRow[];
  average_theta: number;
  average_normalized: number;
  top20_theta: number;
  top50_theta: number;
  top20_normalized: number;
  top50_normalized: number;
  rank_line: string;
  table: string;
}

export interface SessionState {
  session_id: string;
  pool: string;
  concept: string | null;
  status: "active" | "awaiting_grade" | "stopped";
  stop_reason: string | null;
  step: number;
  theta: number;
  se: number | null;
  question: QuestionView | null;
  trajectory: TrajectoryPoint[];
  report?: Report;
}

export interface StartRequest {
  pool?: string;
  concept?: string | null;
  policy?: { kind: string; seed?: number | null };
  rule?: { max_length: number; se_threshold: number; min_length: number };
  session_id?: string;
}
