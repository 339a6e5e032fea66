/**
 * Console state and the transitions that feed it.
 *
 * Everything rendered comes out of this store, and everything in the
 * store came from an API response: reads fill the tables, accepted
 * writes park a pending row until the journal or a /tx poll settles
 * them. No DOM in here, which is what keeps the transitions testable.
 */

import type {
  Criticality,
  DeviceRegistration,
  DeviceView,
  HistoryView,
  JournalEntry,
  PolicyView,
  StatusView,
  TxStatus,
} from "./api";
import type { FeedStatus } from "./sse";

export type Badge = "pending" | "confirmed" | "failed";

export interface DeviceRow {
  view: DeviceView;
  badge: Badge;
  tx_id?: string;
  error?: string;
}

export interface PendingTx {
  tx_id: string;
  device_id: string;
  kind:
    | "add_device"
    | "update_device"
    | "delete_device"
    | "add_policy"
    | "update_policy"
    | "delete_policy";
  // what the API accepted, rendered with a pending badge until a read
  // can serve the confirmed record
  registration?: DeviceRegistration;
}

export interface FeedRow {
  seq: number;
  t: number;
  kind: string;
  criticality: Criticality | null;
  text: string;
}

export interface ConsoleState {
  connection: FeedStatus;
  status: StatusView | null;
  devices: DeviceView[];
  pending: PendingTx[];
  selected: string | null;
  policies: PolicyView[];
  feed: FeedRow[];
  history: HistoryView | null;
  historyWarning: string | null;
}

export class Store {
  state: ConsoleState = {
    connection: "connecting",
    status: null,
    devices: [],
    pending: [],
    selected: null,
    policies: [],
    feed: [],
    history: null,
    historyWarning: null,
  };

  private listeners: Array<() => void> = [];

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  // reads landing

  setStatus(status: StatusView): void {
    this.state.status = status;
    this.emit();
  }

  setConnection(connection: FeedStatus): void {
    this.state.connection = connection;
    this.emit();
  }

  setDevices(devices: DeviceView[]): void {
    this.state.devices = devices;
    // a pending add whose row now reads back is settled
    const visible = new Set(devices.map((d) => d.device_id));
    this.state.pending = this.state.pending.filter(
      (p) => !(p.kind === "add_device" && visible.has(p.device_id)),
    );
    this.emit();
  }

  selectDevice(deviceId: string | null): void {
    this.state.selected = deviceId;
    this.state.policies = [];
    this.state.history = null;
    this.state.historyWarning = null;
    this.emit();
  }

  setPolicies(policies: PolicyView[]): void {
    this.state.policies = policies;
    this.emit();
  }

  setHistory(view: HistoryView | null, warning: string | null = null): void {
    this.state.history = view;
    this.state.historyWarning = warning;
    this.emit();
  }

  // writes in flight

  trackPending(tx: PendingTx): void {
    this.state.pending.push(tx);
    this.emit();
  }

  resolveTx(txId: string, status: TxStatus, error: string | null): void {
    if (status === "pending") return;
    if (status === "failed") {
      const entry = this.state.pending.find((p) => p.tx_id === txId);
      if (entry) {
        this.state.feed.push({
          seq: -1,
          t: this.state.status?.sim_now_ms ?? 0,
          kind: "WriteFailed",
          criticality: "High",
          text: `${entry.kind} on ${entry.device_id} failed: ${error ?? "?"}`,
        });
      }
    }
    this.state.pending = this.state.pending.filter((p) => p.tx_id !== txId);
    this.emit();
  }

  // journal arriving over SSE

  applyJournal(entry: JournalEntry): void {
    this.state.feed.push(feedRow(entry));
    if (entry.tx_id) {
      // an add_device stays pending until the refreshed device list
      // reads it back, so its overlay row never blinks out
      this.state.pending = this.state.pending.filter(
        (p) => p.tx_id !== entry.tx_id || p.kind === "add_device",
      );
    }
    this.emit();
  }

  // derived rows for rendering

  deviceRows(): DeviceRow[] {
    const rows: DeviceRow[] = this.state.devices.map((view) => ({
      view,
      badge: "confirmed",
    }));
    const listed = new Set(this.state.devices.map((d) => d.device_id));
    for (const p of this.state.pending) {
      if (p.kind !== "add_device" || !p.registration) continue;
      if (listed.has(p.device_id)) continue;
      rows.push({
        view: {
          device_id: p.registration.device_id,
          ip_address: p.registration.ip_address,
          model: p.registration.model,
          polling_interval: p.registration.polling_interval,
          target_attributes: p.registration.target_attributes,
          deleted: false,
          archived_windows: 0,
        },
        badge: "pending",
        tx_id: p.tx_id,
      });
    }
    return rows;
  }

  pendingFor(deviceId: string): PendingTx[] {
    return this.state.pending.filter((p) => p.device_id === deviceId);
  }
}

// one line per journal entry; alerts keep their criticality so the
// renderer can color them
export function feedRow(entry: JournalEntry): FeedRow {
  const p = entry.payload;
  let criticality: Criticality | null = null;
  let text: string;
  switch (entry.kind) {
    case "AlertRaised": {
      criticality = p.criticality as Criticality;
      const sense = p.threshold_type === "Minimum" ? "below" : "above";
      text =
        `${p.device_id} ${p.attribute} ${fmt(p.value)} ${sense} ` +
        `${fmt(p.threshold_value)} (violation ${p.violation_count}, ` +
        `${p.policy_id})`;
      break;
    }
    case "DeviceAdded":
      text = `device registered: ${p.device_id}`;
      break;
    case "DeviceUpdated":
      text = `device updated: ${p.device_id}`;
      break;
    case "DeviceDeleted":
      text = `device deleted: ${p.device_id}`;
      break;
    case "PolicyAdded":
    case "PolicyUpdated": {
      const pol = p.policy as Record<string, unknown>;
      const verb = entry.kind === "PolicyAdded" ? "added" : "updated";
      text =
        `policy ${pol.policy_id} ${verb} on ${p.device_id} ` +
        `(${pol.attribute} ${pol.threshold_type} ${fmt(pol.threshold_value)})`;
      break;
    }
    case "PolicyDeleted":
      text = `policy ${p.policy_id} deleted on ${p.device_id}`;
      break;
    case "HashesAnchored": {
      const entries = p.entries as unknown[];
      text = `${entries.length} window hash${entries.length === 1 ? "" : "es"} anchored`;
      break;
    }
    default:
      text = entry.kind;
  }
  return { seq: entry.seq, t: entry.t, kind: entry.kind, criticality, text };
}

function fmt(value: unknown): string {
  if (typeof value === "number" && !Number.isInteger(value)) {
    return value.toFixed(2);
  }
  return String(value);
}
