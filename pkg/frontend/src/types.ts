/** Wire types mirroring the alert service API v1 (field names match the JSON). */

export type Disposition = "confirmed" | "suppressed";
export type ReviewState = "unreviewed" | "acknowledged" | "false_positive";
export type ReviewVerdict = "acknowledged" | "false_positive";

export interface DeliveryRecord {
  url: string;
  success: boolean;
  attempts: number;
}

export interface Alert {
  report_id: string;
  device_id: string;
  received_at_ms: number;
  timestamp_ms: number;
  track_id: number;
  box: [number, number, number, number];
  detector_score: number;
  second_stage_score: number;
  disposition: Disposition;
  review: ReviewState;
  reviewer: string | null;
  reviewed_at_ms: number | null;
  deliveries: DeliveryRecord[];
  undelivered: boolean;
}

export interface AlertPage {
  alerts: Alert[];
  page: number;
  pages: number;
  total: number;
}

export interface Device {
  device_id: string;
  name: string;
  last_seen_ms: number;
  reports: number;
  online: boolean;
}

export interface HardNegatives {
  count: number;
  report_ids: string[];
}

export interface AlertFilters {
  device?: string;
  disposition?: Disposition;
  review?: ReviewState;
}
