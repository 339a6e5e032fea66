/**
 * Typed client for the node's HTTP API.
 *
 * Writes answer 202 with a transaction id and stay invisible to reads
 * until a block confirms them; every read carries the block height it
 * was served at. The client never interprets state, it only moves
 * bytes, so each method maps to exactly one endpoint.
 */

export type ThresholdType = "Minimum" | "Maximum";
export type Criticality = "Low" | "Medium" | "High";
export type TxStatus = "pending" | "confirmed" | "failed";

export interface DeviceView {
  device_id: string;
  ip_address: string;
  model: string;
  polling_interval: number;
  target_attributes: string[];
  deleted: boolean;
  archived_windows: number;
}

export interface DeviceRegistration {
  device_id: string;
  ip_address: string;
  model: string;
  polling_interval: number;
  target_attributes: string[];
  credentials: string;
}

export interface PolicyView {
  policy_id: string;
  attribute: string;
  threshold_type: ThresholdType;
  threshold_value: number;
  max_violations: number;
  criticality: Criticality;
}

export type PolicyArgs = Omit<PolicyView, "policy_id">;

export interface TxView {
  tx_id: string;
  op_kind: string;
  status: TxStatus;
  submitted_at: number;
  gas_used: number | null;
  block_height: number | null;
  error: string | null;
}

export interface HistorySample {
  device_id: string;
  attribute: string;
  timestamp: number;
  value: number;
}

export interface HistoryEvent {
  device_id: string;
  attribute: string;
  policy_id: string;
  criticality: Criticality;
  threshold_type: ThresholdType;
  threshold_value: number;
  violation_count: number;
  value: number;
  timestamp: number;
}

export interface HistorySource {
  origin: "archive" | "tsdb";
  from: number;
  to: number;
  window_index?: number;
  data_hash?: string;
  events_hash?: string;
}

export interface HistoryView {
  device_id: string;
  from: number;
  to: number;
  samples: HistorySample[];
  events: HistoryEvent[];
  sources: HistorySource[];
  served_at_height: number;
}

export interface ArchiveRef {
  window_index: number;
  data_hash: string;
  events_hash?: string;
}

export interface StatusView {
  sim_now_ms: number;
  block_height: number;
  pending_txs: number;
  devices: number;
  speed: number;
}

export interface JournalEntry {
  seq: number;
  t: number;
  kind: string;
  payload: Record<string, unknown>;
  block_height?: number | null;
  tx_id?: string | null;
}

export interface PendingWrite {
  tx_id: string;
  status: "pending";
}

export interface DevicesPage {
  devices: DeviceView[];
  served_at_height: number;
}
export interface DevicePage {
  device: DeviceView;
  served_at_height: number;
}
export interface PoliciesPage {
  policies: PolicyView[];
  served_at_height: number;
}
export interface ArchivesPage {
  archives: ArchiveRef[];
  served_at_height: number;
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

/** A 4xx/5xx answer, with the server's error message. */
export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiRequestError";
  }
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    // wrap so the function is never invoked with the client as receiver
    this.fetchFn = fetchFn ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<unknown> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let message = `${response.status}`;
      try {
        const payload = (await response.json()) as { error?: string };
        if (payload.error) message = payload.error;
      } catch {
        // non-JSON error body, keep the status code as the message
      }
      throw new ApiRequestError(response.status, message);
    }
    return response.json();
  }

  // devices

  listDevices(includeDeleted = false): Promise<DevicesPage> {
    const qs = includeDeleted ? "?include_deleted=true" : "";
    return this.request("GET", `/devices${qs}`) as Promise<DevicesPage>;
  }

  getDevice(deviceId: string): Promise<DevicePage> {
    return this.request("GET", `/devices/${deviceId}`) as Promise<DevicePage>;
  }

  addDevice(registration: DeviceRegistration): Promise<PendingWrite> {
    return this.request("POST", "/devices", registration) as Promise<PendingWrite>;
  }

  updateDevice(
    deviceId: string,
    fields: Omit<DeviceRegistration, "device_id">,
  ): Promise<PendingWrite> {
    return this.request("PUT", `/devices/${deviceId}`, fields) as Promise<PendingWrite>;
  }

  deleteDevice(deviceId: string): Promise<PendingWrite> {
    return this.request("DELETE", `/devices/${deviceId}`) as Promise<PendingWrite>;
  }

  // policies

  getPolicies(deviceId: string): Promise<PoliciesPage> {
    return this.request("GET", `/devices/${deviceId}/policies`) as Promise<PoliciesPage>;
  }

  addPolicy(deviceId: string, args: PolicyArgs): Promise<PendingWrite> {
    return this.request(
      "POST", `/devices/${deviceId}/policies`, args) as Promise<PendingWrite>;
  }

  updatePolicy(
    deviceId: string,
    policyId: string,
    args: PolicyArgs,
  ): Promise<PendingWrite> {
    return this.request(
      "PUT", `/devices/${deviceId}/policies/${policyId}`, args) as Promise<PendingWrite>;
  }

  deletePolicy(deviceId: string, policyId: string): Promise<PendingWrite> {
    return this.request(
      "DELETE", `/devices/${deviceId}/policies/${policyId}`) as Promise<PendingWrite>;
  }

  // history and archives

  getHistory(deviceId: string, from: number, to: number): Promise<HistoryView> {
    return this.request(
      "GET",
      `/devices/${deviceId}/history?from=${from}&to=${to}`,
    ) as Promise<HistoryView>;
  }

  getArchives(deviceId: string): Promise<ArchivesPage> {
    return this.request("GET", `/devices/${deviceId}/archives`) as Promise<ArchivesPage>;
  }

  // transactions and telemetry

  getTx(txId: string): Promise<TxView> {
    return this.request("GET", `/tx/${txId}`) as Promise<TxView>;
  }

  getStatus(): Promise<StatusView> {
    return this.request("GET", "/status") as Promise<StatusView>;
  }

  /** Move frozen simulated time forward. Only works with speed 0 nodes. */
  advance(ms: number): Promise<{ sim_now_ms: number }> {
    return this.request("POST", "/sim/advance", { ms }) as Promise<{
      sim_now_ms: number;
    }>;
  }
}
