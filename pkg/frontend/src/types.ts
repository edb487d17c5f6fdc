// Shapes mirrored from the server API (api.md) and the NDJSON stream.

export interface GraphNode {
  id: string;
  lat: number;
  lon: number;
}

export interface GraphEdge {
  id: string;
  from: string;
  to: string;
  length_m: number;
  free_flow_speed_ms: number;
  current_speed_ms: number;
}

export interface GraphDoc {
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface StopDoc {
  stop_id: string;
  lat: number;
  lon: number;
  task_kind: string;
  status: "Pending" | "Arrived" | "Done";
  node_id: string;
  address: string | null;
}

export interface TripDoc {
  trip_id: string;
  vehicle_id: string;
  driver_id: string;
  state: "Planned" | "Active" | "Completed" | "Aborted";
  reroute_count: number;
  edge_ids: string[];
  total_length_m: number;
  total_time_s: number;
  stops: StopDoc[];
}

export interface ProposalDoc {
  proposal_id: string;
  trip_id: string;
  created_at: number;
  expires_at: number;
  edge_ids: string[];
  old_remaining_s: number;
  new_total_s: number;
  saving_s: number;
}

export interface EtaRow {
  stop_id: string;
  eta: number;
}

export interface EtaDoc {
  trip_id: string;
  now: number;
  etas: EtaRow[];
}

// one line of the /stream NDJSON feed
export interface StreamEvent {
  event: string;
  timestamp: number;
  [key: string]: unknown;
}

export interface PositionEvent extends StreamEvent {
  event: "position";
  vehicle_id: string;
  trip_id: string;
  lat: number;
  lon: number;
  speed_ms: number;
  heading_deg: number;
}

export interface AdvisoryEvent extends StreamEvent {
  event: "advisory";
  msg_type: "HAZARD" | "IVIM" | "PRIORITY";
  message: Record<string, unknown>;
  zone: { lat: number; lon: number; radius_m: number };
  delivered: number;
}

export interface GrantEvent extends StreamEvent {
  event: "grant";
  intersection_id: string;
  vehicle_id: string;
  approach_id: string;
  verdict: "Granted" | "Denied";
  extension_s: number;
}
