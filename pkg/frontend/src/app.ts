/**
 * The console itself: four panes wired to one store.
 *
 * devices   registry table plus the add/edit form
 * policies  per-device policy table plus its form
 * feed      the journal, streamed over SSE, criticality colored
 * history   range query rendered as a provenance-shaded chart
 *
 * All mutation goes through the API client; the DOM layer only reads
 * the store. mountConsole takes its document from the root element,
 * so the same code runs in a browser and under a synthetic DOM.
 */

import {
  ApiClient,
  ApiRequestError,
  type DeviceRegistration,
  type FetchLike,
  type PolicyView,
} from "./api";
import { renderHistoryChart, formatSimTime } from "./chart";
import {
  CRITICALITY_LEVELS,
  THRESHOLD_TYPES,
  parseDeviceForm,
  parsePolicyForm,
} from "./forms";
import { EventFeed } from "./sse";
import { Store } from "./state";

export interface ConsoleOptions {
  baseUrl: string;
  fetchFn?: FetchLike;
  /** journal position to start the feed from */
  since?: number;
  feedRetryMs?: number;
  txPollMs?: number;
  statusPollMs?: number;
}

export interface ConsoleHandle {
  client: ApiClient;
  store: Store;
  feed: EventFeed;
  root: HTMLElement;
  stop(): void;
  /** resolves once every in-flight refresh has landed */
  settle(): Promise<void>;
}

const SKELETON = `
<div class="console">
  <header>
    <h1>fogchain console</h1>
    <span class="status-line" data-role="status-line">connecting</span>
    <span class="conn-banner hidden" data-role="banner">connection lost, retrying</span>
  </header>
  <main>
    <section class="pane" data-pane="devices">
      <h2>devices</h2>
      <table>
        <thead><tr>
          <th>id</th><th>address</th><th>model</th><th>poll s</th>
          <th>attributes</th><th>archived</th><th>status</th><th></th>
        </tr></thead>
        <tbody data-role="device-rows"></tbody>
      </table>
      <form data-role="device-form" data-mode="add">
        <input name="device_id" placeholder="device id">
        <input name="ip_address" placeholder="ip address">
        <input name="model" placeholder="model">
        <input name="polling_interval" placeholder="polling interval s" value="60">
        <input name="target_attributes" placeholder="attributes, comma separated">
        <input name="credentials" placeholder="credentials" type="password">
        <button type="submit" data-role="device-submit">add device</button>
        <button type="button" class="hidden" data-role="device-cancel">cancel</button>
      </form>
      <ul class="form-errors" data-role="device-errors"></ul>
    </section>
    <section class="pane" data-pane="policies">
      <h2>policies <span class="pane-context" data-role="policy-device">(no device selected)</span></h2>
      <table>
        <thead><tr>
          <th>id</th><th>attribute</th><th>type</th><th>threshold</th>
          <th>max viol.</th><th>criticality</th><th></th>
        </tr></thead>
        <tbody data-role="policy-rows"></tbody>
      </table>
      <p class="pending-note hidden" data-role="policy-pending"></p>
      <form data-role="policy-form" data-mode="add">
        <input name="attribute" placeholder="attribute">
        <select name="threshold_type" data-role="threshold-type"></select>
        <input name="threshold_value" placeholder="threshold value">
        <input name="max_violations" placeholder="max violations" value="0">
        <select name="criticality" data-role="criticality"></select>
        <button type="submit" data-role="policy-submit">add policy</button>
        <button type="button" class="hidden" data-role="policy-cancel">cancel</button>
      </form>
      <ul class="form-errors" data-role="policy-errors"></ul>
    </section>
    <section class="pane" data-pane="feed">
      <h2>live feed</h2>
      <ol class="feed" data-role="feed"></ol>
    </section>
    <section class="pane" data-pane="history">
      <h2>history <span class="pane-context" data-role="history-device"></span></h2>
      <form data-role="history-form">
        <input name="from" placeholder="from ms" value="0">
        <input name="to" placeholder="to ms">
        <button type="submit">load</button>
      </form>
      <div class="integrity-warning hidden" data-role="integrity"></div>
      <div class="history-error hidden" data-role="history-error"></div>
      <div data-role="chart"></div>
      <ul class="sources" data-role="sources"></ul>
    </section>
  </main>
</div>`;

export function mountConsole(
  root: HTMLElement,
  options: ConsoleOptions,
): ConsoleHandle {
  const doc = root.ownerDocument;
  const client = new ApiClient(options.baseUrl, options.fetchFn);
  const store = new Store();
  root.innerHTML = SKELETON;

  const el = <T extends Element>(selector: string): T => {
    const found = root.querySelector(selector);
    if (!found) throw new Error(`missing ${selector}`);
    return found as T;
  };
  const deviceRows = el<HTMLTableSectionElement>('[data-role="device-rows"]');
  const policyRows = el<HTMLTableSectionElement>('[data-role="policy-rows"]');
  const feedList = el<HTMLOListElement>('[data-role="feed"]');
  const deviceForm = el<HTMLFormElement>('[data-role="device-form"]');
  const policyForm = el<HTMLFormElement>('[data-role="policy-form"]');
  const historyForm = el<HTMLFormElement>('[data-role="history-form"]');

  // the selector offers the two threshold semantics the contract has,
  // and nothing else; same for criticality
  for (const value of THRESHOLD_TYPES) {
    const option = doc.createElement("option");
    option.value = value;
    option.textContent = value;
    el<HTMLSelectElement>('[data-role="threshold-type"]').appendChild(option);
  }
  for (const value of CRITICALITY_LEVELS) {
    const option = doc.createElement("option");
    option.value = value;
    option.textContent = value;
    el<HTMLSelectElement>('[data-role="criticality"]').appendChild(option);
  }

  // ---- refresh plumbing ----------------------------------------------------

  let inflight = 0;
  const settleWaiters: Array<() => void> = [];
  function track<T>(promise: Promise<T>): Promise<T> {
    inflight += 1;
    return promise.finally(() => {
      inflight -= 1;
      if (inflight === 0) {
        for (const wake of settleWaiters.splice(0)) wake();
      }
    });
  }

  async function settle(): Promise<void> {
    await Promise.resolve();
    while (inflight > 0) {
      await new Promise<void>((resolve) => settleWaiters.push(resolve));
      await Promise.resolve();
    }
  }

  async function refreshAll(): Promise<void> {
    const [status, devices] = await Promise.all([
      client.getStatus(),
      client.listDevices(),
    ]);
    store.setStatus(status);
    store.setDevices(devices.devices);
    const selected = store.state.selected;
    if (selected) {
      try {
        const page = await client.getPolicies(selected);
        store.setPolicies(page.policies);
      } catch (error) {
        if (error instanceof ApiRequestError && error.status === 404) {
          store.selectDevice(null); // deleted out from under us
        }
      }
    }
  }

  let refreshQueued = false;
  function queueRefresh(): void {
    if (refreshQueued) return;
    refreshQueued = true;
    setTimeout(() => {
      refreshQueued = false;
      void track(refreshAll().catch(() => undefined));
    }, 0);
  }

  async function sweepPending(): Promise<void> {
    for (const pending of [...store.state.pending]) {
      try {
        const tx = await client.getTx(pending.tx_id);
        store.resolveTx(tx.tx_id, tx.status, tx.error);
      } catch {
        // transient; next sweep retries
      }
    }
  }

  // ---- forms -----------------------------------------------------------------

  function values(form: HTMLFormElement): Record<string, string> {
    const out: Record<string, string> = {};
    for (const field of form.querySelectorAll<HTMLInputElement>(
      "input[name], select[name]",
    )) {
      out[field.name] = field.value;
    }
    return out;
  }

  function showIssues(listEl: HTMLUListElement, issues: string[]): void {
    listEl.innerHTML = "";
    for (const issue of issues) {
      const item = doc.createElement("li");
      item.textContent = issue;
      listEl.appendChild(item);
    }
  }

  function resetDeviceForm(): void {
    deviceForm.reset();
    deviceForm.dataset.mode = "add";
    el<HTMLInputElement>('[data-role="device-form"] input[name="device_id"]')
      .readOnly = false;
    el<HTMLButtonElement>('[data-role="device-submit"]').textContent =
      "add device";
    el<HTMLButtonElement>('[data-role="device-cancel"]').classList.add("hidden");
  }

  deviceForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const errors = el<HTMLUListElement>('[data-role="device-errors"]');
    const parsed = parseDeviceForm(values(deviceForm));
    if (!parsed.ok) {
      showIssues(errors, parsed.issues); // invalid input never leaves the page
      return;
    }
    const registration = parsed.value;
    const updating = deviceForm.dataset.mode === "update";
    const write = updating
      ? client.updateDevice(registration.device_id, {
          ip_address: registration.ip_address,
          model: registration.model,
          polling_interval: registration.polling_interval,
          target_attributes: registration.target_attributes,
          credentials: registration.credentials,
        })
      : client.addDevice(registration);
    void track(
      write
        .then((accepted) => {
          store.trackPending({
            tx_id: accepted.tx_id,
            device_id: registration.device_id,
            kind: updating ? "update_device" : "add_device",
            registration: updating ? undefined : registration,
          });
          showIssues(errors, []);
          resetDeviceForm();
        })
        .catch((error) => {
          showIssues(errors, [describe(error)]);
        }),
    );
  });

  el<HTMLButtonElement>('[data-role="device-cancel"]').addEventListener(
    "click",
    resetDeviceForm,
  );

  function startDeviceEdit(registrationSeed: DeviceRegistration): void {
    deviceForm.dataset.mode = "update";
    setField(deviceForm, "device_id", registrationSeed.device_id, true);
    setField(deviceForm, "ip_address", registrationSeed.ip_address);
    setField(deviceForm, "model", registrationSeed.model);
    setField(deviceForm, "polling_interval",
      String(registrationSeed.polling_interval));
    setField(deviceForm, "target_attributes",
      registrationSeed.target_attributes.join(", "));
    setField(deviceForm, "credentials", "");
    el<HTMLButtonElement>('[data-role="device-submit"]').textContent =
      "update device";
    el<HTMLButtonElement>('[data-role="device-cancel"]')
      .classList.remove("hidden");
  }

  function resetPolicyForm(): void {
    policyForm.reset();
    policyForm.dataset.mode = "add";
    delete policyForm.dataset.policyId;
    el<HTMLButtonElement>('[data-role="policy-submit"]').textContent =
      "add policy";
    el<HTMLButtonElement>('[data-role="policy-cancel"]').classList.add("hidden");
  }

  policyForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const errors = el<HTMLUListElement>('[data-role="policy-errors"]');
    const deviceId = store.state.selected;
    if (!deviceId) {
      showIssues(errors, ["select a device first"]);
      return;
    }
    const parsed = parsePolicyForm(values(policyForm));
    if (!parsed.ok) {
      showIssues(errors, parsed.issues);
      return;
    }
    const updating = policyForm.dataset.mode === "update";
    const policyId = policyForm.dataset.policyId;
    const write =
      updating && policyId
        ? client.updatePolicy(deviceId, policyId, parsed.value)
        : client.addPolicy(deviceId, parsed.value);
    void track(
      write
        .then((accepted) => {
          store.trackPending({
            tx_id: accepted.tx_id,
            device_id: deviceId,
            kind: updating ? "update_policy" : "add_policy",
          });
          showIssues(errors, []);
          resetPolicyForm();
        })
        .catch((error) => {
          showIssues(errors, [describe(error)]);
        }),
    );
  });

  el<HTMLButtonElement>('[data-role="policy-cancel"]').addEventListener(
    "click",
    resetPolicyForm,
  );

  function startPolicyEdit(policy: PolicyView): void {
    policyForm.dataset.mode = "update";
    policyForm.dataset.policyId = policy.policy_id;
    setField(policyForm, "attribute", policy.attribute);
    setField(policyForm, "threshold_type", policy.threshold_type);
    setField(policyForm, "threshold_value", String(policy.threshold_value));
    setField(policyForm, "max_violations", String(policy.max_violations));
    setField(policyForm, "criticality", policy.criticality);
    el<HTMLButtonElement>('[data-role="policy-submit"]').textContent =
      `update ${policy.policy_id}`;
    el<HTMLButtonElement>('[data-role="policy-cancel"]')
      .classList.remove("hidden");
  }

  historyForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const deviceId = store.state.selected;
    const integrity = el<HTMLDivElement>('[data-role="integrity"]');
    const plainError = el<HTMLDivElement>('[data-role="history-error"]');
    integrity.classList.add("hidden");
    plainError.classList.add("hidden");
    if (!deviceId) {
      plainError.textContent = "select a device first";
      plainError.classList.remove("hidden");
      return;
    }
    const raw = values(historyForm);
    const from = Number(raw.from);
    const to = raw.to === "" || raw.to === undefined
      ? (store.state.status?.sim_now_ms ?? 0) + 1
      : Number(raw.to);
    if (!Number.isFinite(from) || !Number.isFinite(to)) {
      plainError.textContent = "from and to must be milliseconds";
      plainError.classList.remove("hidden");
      return;
    }
    void track(
      client
        .getHistory(deviceId, Math.floor(from), Math.floor(to))
        .then((view) => store.setHistory(view))
        .catch((error) => {
          if (error instanceof ApiRequestError && error.status === 502) {
            // an anchored hash with no object behind it; say so loudly
            store.setHistory(null, error.message);
          } else {
            store.setHistory(null);
            plainError.textContent = describe(error);
            plainError.classList.remove("hidden");
          }
        }),
    );
  });

  // ---- rendering --------------------------------------------------------------

  function render(): void {
    const state = store.state;

    const statusLine = el<HTMLSpanElement>('[data-role="status-line"]');
    if (state.status) {
      const speed =
        state.status.speed > 0 ? `${state.status.speed}x` : "frozen";
      statusLine.textContent =
        `block ${state.status.block_height} | ` +
        `t=${formatSimTime(state.status.sim_now_ms)} (${speed}) | ` +
        `${state.status.pending_txs} tx pending`;
    }
    el<HTMLSpanElement>('[data-role="banner"]').classList.toggle(
      "hidden",
      state.connection === "live" || state.connection === "connecting",
    );

    // devices
    deviceRows.innerHTML = "";
    for (const row of store.deviceRows()) {
      const tr = doc.createElement("tr");
      tr.dataset.deviceId = row.view.device_id;
      if (state.selected === row.view.device_id) tr.classList.add("selected");
      tr.appendChild(cell(doc, row.view.device_id));
      tr.appendChild(cell(doc, row.view.ip_address));
      tr.appendChild(cell(doc, row.view.model));
      tr.appendChild(cell(doc, String(row.view.polling_interval)));
      tr.appendChild(cell(doc, row.view.target_attributes.join(", ")));
      tr.appendChild(cell(doc, String(row.view.archived_windows)));
      const badge = doc.createElement("td");
      const badgeSpan = doc.createElement("span");
      badgeSpan.className = `badge badge-${row.badge}`;
      badgeSpan.textContent = row.badge;
      badge.appendChild(badgeSpan);
      tr.appendChild(badge);
      const actions = doc.createElement("td");
      actions.className = "actions";
      if (row.badge === "confirmed") {
        actions.appendChild(
          button(doc, "select", () => {
            store.selectDevice(row.view.device_id);
            void track(
              client
                .getPolicies(row.view.device_id)
                .then((page) => store.setPolicies(page.policies))
                .catch(() => undefined),
            );
          }),
        );
        actions.appendChild(
          button(doc, "edit", () =>
            startDeviceEdit({ ...row.view, credentials: "" }),
          ),
        );
        actions.appendChild(
          button(doc, "delete", () => {
            void track(
              client
                .deleteDevice(row.view.device_id)
                .then((accepted) =>
                  store.trackPending({
                    tx_id: accepted.tx_id,
                    device_id: row.view.device_id,
                    kind: "delete_device",
                  }),
                )
                .catch(() => undefined),
            );
          }),
        );
      }
      tr.appendChild(actions);
      deviceRows.appendChild(tr);
    }

    // policies
    el<HTMLSpanElement>('[data-role="policy-device"]').textContent =
      state.selected ? `on ${state.selected}` : "(no device selected)";
    el<HTMLSpanElement>('[data-role="history-device"]').textContent =
      state.selected ? `of ${state.selected}` : "";
    policyRows.innerHTML = "";
    for (const policy of state.policies) {
      const tr = doc.createElement("tr");
      tr.dataset.policyId = policy.policy_id;
      tr.appendChild(cell(doc, policy.policy_id));
      tr.appendChild(cell(doc, policy.attribute));
      tr.appendChild(cell(doc, policy.threshold_type));
      tr.appendChild(cell(doc, String(policy.threshold_value)));
      tr.appendChild(cell(doc, String(policy.max_violations)));
      const crit = doc.createElement("td");
      const critSpan = doc.createElement("span");
      critSpan.className = `crit crit-${policy.criticality}`;
      critSpan.textContent = policy.criticality;
      crit.appendChild(critSpan);
      tr.appendChild(crit);
      const actions = doc.createElement("td");
      actions.className = "actions";
      actions.appendChild(button(doc, "edit", () => startPolicyEdit(policy)));
      actions.appendChild(
        button(doc, "delete", () => {
          const deviceId = state.selected;
          if (!deviceId) return;
          void track(
            client
              .deletePolicy(deviceId, policy.policy_id)
              .then((accepted) =>
                store.trackPending({
                  tx_id: accepted.tx_id,
                  device_id: deviceId,
                  kind: "delete_policy",
                }),
              )
              .catch(() => undefined),
          );
        }),
      );
      tr.appendChild(actions);
      policyRows.appendChild(tr);
    }
    const pendingNote = el<HTMLParagraphElement>('[data-role="policy-pending"]');
    const pendingHere = state.selected
      ? store
          .pendingFor(state.selected)
          .filter((p) => p.kind.endsWith("_policy"))
      : [];
    pendingNote.classList.toggle("hidden", pendingHere.length === 0);
    pendingNote.textContent = pendingHere.length
      ? `${pendingHere.length} policy write${pendingHere.length === 1 ? "" : "s"} pending confirmation`
      : "";

    // feed, arrival order, capped for the DOM's sake
    feedList.innerHTML = "";
    for (const row of state.feed.slice(-500)) {
      const li = doc.createElement("li");
      li.dataset.seq = String(row.seq);
      li.dataset.kind = row.kind;
      if (row.criticality) li.classList.add(`crit-${row.criticality}`);
      li.textContent = `[${formatSimTime(row.t)}] ${row.kind}: ${row.text}`;
      feedList.appendChild(li);
    }

    // history
    const integrity = el<HTMLDivElement>('[data-role="integrity"]');
    if (state.historyWarning) {
      integrity.textContent =
        `archive integrity violation: ${state.historyWarning}`;
      integrity.classList.remove("hidden");
    } else {
      integrity.classList.add("hidden");
    }
    const chartBox = el<HTMLDivElement>('[data-role="chart"]');
    chartBox.innerHTML = "";
    const sourcesList = el<HTMLUListElement>('[data-role="sources"]');
    sourcesList.innerHTML = "";
    if (state.history) {
      chartBox.appendChild(renderHistoryChart(doc, state.history));
      for (const source of state.history.sources) {
        const li = doc.createElement("li");
        li.className = `source source-${source.origin}`;
        const range =
          `[${formatSimTime(source.from)}, ${formatSimTime(source.to)})`;
        li.textContent =
          source.origin === "archive"
            ? `archive window ${source.window_index} ${range} ` +
              `${(source.data_hash ?? "").slice(0, 12)}...`
            : `live store ${range}`;
        sourcesList.appendChild(li);
      }
    }
  }

  store.subscribe(render);

  // ---- live machinery -----------------------------------------------------------

  const feed = new EventFeed(options.baseUrl, {
    since: options.since ?? 0,
    fetchFn: options.fetchFn,
    retryMs: options.feedRetryMs ?? 2000,
    onEntry: (entry) => {
      store.applyJournal(entry);
      queueRefresh();
      void track(sweepPending());
    },
    onStatus: (status) => store.setConnection(status),
  });

  const sweepTimer = setInterval(() => {
    if (store.state.pending.length > 0) void track(sweepPending());
  }, options.txPollMs ?? 1500);
  const statusTimer = setInterval(() => {
    void track(client.getStatus().then((s) => store.setStatus(s)).catch(() => undefined));
  }, options.statusPollMs ?? 2000);

  void track(refreshAll().catch(() => undefined));
  feed.start();

  return {
    client,
    store,
    feed,
    root,
    settle,
    stop() {
      clearInterval(sweepTimer);
      clearInterval(statusTimer);
      feed.stop();
    },
  };
}

function cell(doc: Document, text: string): HTMLTableCellElement {
  const td = doc.createElement("td");
  td.textContent = text;
  return td;
}

function button(
  doc: Document,
  label: string,
  onClick: () => void,
): HTMLButtonElement {
  const btn = doc.createElement("button");
  btn.type = "button";
  btn.textContent = label;
  btn.addEventListener("click", onClick);
  return btn;
}

function setField(
  form: HTMLFormElement,
  name: string,
  value: string,
  readOnly = false,
): void {
  const field = form.querySelector<HTMLInputElement>(`[name="${name}"]`);
  if (!field) return;
  field.value = value;
  // selects have no readOnly; duck-check instead of instanceof so this
  // also runs where browser globals are absent
  if ("readOnly" in field) field.readOnly = readOnly;
}

function describe(error: unknown): string {
  if (error instanceof Error) return error.message;
  return String(error);
}
