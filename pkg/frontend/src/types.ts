/** Payload shapes of the gateway's JSON API. Every response carries schema_version. */

export interface GatewayEvent {
  event_id: number;
  timestamp: number;
  kind: string;
  door_id: string | null;
  subject_id: string | null;
  fused_score: number | null;
  details: Record<string, unknown>;
}

export interface EventsResponse {
  schema_version: string;
  events: GatewayEvent[];
  unacknowledged_alerts: number[];
}

export interface EnrollResponse {
  schema_version: string;
  subject_id: string;
  templates: number;
}

export interface VerifyResponse {
  schema_version: string;
  accepted: boolean;
  fused_score: number | null;
  stage_failed: string | null;
  subject_id: string;
}

export interface IdentifyResponse {
  schema_version: string;
  subject_id: string | null;
  fused_score: number | null;
  stage_failed: string | null;
}

export interface ReportResponse {
  schema_version: string;
  from: number;
  to: number;
  door_counts: Record<string, Record<string, number>>;
  subject_counts: Record<string, Record<string, number>>;
  flow: number[];
  totals: Record<string, number>;
}

/** SPC chart point: [event_id, fused score, out-of-control flag]. */
export type SpcPoint = [number, number, boolean];

export interface SpcResponse {
  schema_version: string;
  window: number;
  mean: number;
  sigma: number;
  ucl: number;
  lcl: number;
  points: SpcPoint[];
}

export interface SubjectSummary {
  subject_id: string;
  display_name: string;
  templates: number;
  enrolled_at: number;
}

export interface SubjectsResponse {
  schema_version: string;
  subjects: SubjectSummary[];
}

export type ConnectionStatus = "online" | "offline";
