/** Gateway API shapes. Every response carries schema_version. */

export interface TriageStatus {
  seq: number;
  indicator: string;
  region_id: string;
  date: string;
  rater: string;
  verdict: "worth_investigating" | "dismissed";
  rank: number | null;
  note: string;
  timestamp: string;
}

export interface RankedPoint {
  indicator: string;
  region_id: string;
  date: string;
  phi: number;
  score: number;
  method: string;
  reference_size: number | null;
  max_size: number | null;
  triage: TriageStatus | null;
}

export interface RankingsResponse {
  schema_version: number;
  date: string;
  points: RankedPoint[];
}

export interface SeriesPoint {
  date: string;
  value: number | null; // null marks a gap; never interpolated
}

export interface Series {
  region_id: string;
  tier: string;
  population: number;
  points: SeriesPoint[];
}

export interface ContextResponse {
  schema_version: number;
  indicator: string;
  date: string;
  target: Series;
  parents: Series[];
  siblings: Series[];
  children: Series[];
}

export interface LabelsResponse {
  schema_version: number;
  labels: TriageStatus[];
}

export interface TriageSubmission {
  indicator: string;
  region_id: string;
  date: string;
  rater: string;
  verdict: "worth_investigating" | "dismissed";
  rank?: number;
  note?: string;
}

export interface LabelAck {
  schema_version: number;
  seq: number;
}

export function pointKey(p: { indicator: string; region_id: string; date: string }): string {
  return `${p.indicator}|${p.region_id}|${p.date}`;
}
