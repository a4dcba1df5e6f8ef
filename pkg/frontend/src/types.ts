// Wire types of the annotation service API.

export interface QueueItem {
  id: string;
  text: string;
}

export interface NextResponse {
  item: QueueItem | null;
  lease_seconds?: number;
  exhausted: boolean;
}

export interface Criterion {
  code: string;
  description: string;
}

export interface CriteriaSchema {
  version: string;
  subdomains: Record<string, Criterion[]>;
  flags: Criterion[];
}

export interface Progress {
  total: number;
  annotated: number;
  inconclusive_so_far: number;
  remaining: number;
}

export type Override = "inconclusive" | "excluded_non_user_content";

export type PreviewLabel = "target" | "non_target" | Override;

export interface RecordPayload {
  post_id: string;
  checked_criteria: string[];
  flags: string[];
  manual_label_override: Override | null;
  override_reason: string | null;
}

export interface ApiError {
  error: string;
  detail: string;
}
