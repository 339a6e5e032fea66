"""HTTP facade over a running System.

Writes are asynchronous by design: a POST/PUT/DELETE validates the body,
prechecks it against confirmed contract state, submits a transaction,
and answers 202 with the tx id while the mempool does its thing. Reads
always come from confirmed state and carry the block height they were
served at, so a client can watch its own write become visible.

Simulated time only moves when something drives it. With speed > 0 the
service maps elapsed wall time onto the simulation on every request
(and inside the event stream); with speed == 0 time is frozen except
for explicit POST /sim/advance calls, which is what deterministic tests
and demos use.
"""

import json
import threading
import time
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response, StreamingResponse

from .canonical import canonical_str
from .cas import hash_from_hex
from .contracts import _check_registration
from .errors import (
    FogchainError,
    InvalidPolicy,
    InvalidRange,
    InvalidRegistration,
    MissingArchive,
    NotFound,
    UnknownDevice,
)
from .policy import validate_policy_args
from .runtime import System


class ApiError(FogchainError):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


class Service:
    """Thread-safe operations layer between HTTP handlers and the System."""

    def __init__(self, system: System, speed: float = 0.0):
        self.system = system
        self.speed = speed
        self.lock = threading.Lock()
        self._wall0 = time.monotonic()
        self._sim0 = system.clock.now_ms

    # --- time ----------------------------------------------------------------

    def _sync_clock(self) -> None:
        if self.speed <= 0:
            return
        elapsed = time.monotonic() - self._wall0
        target = self._sim0 + int(elapsed * 1000 * self.speed)
        if target > self.system.clock.now_ms:
            self.system.run_until(target)

    def advance(self, ms: int) -> int:
        with self.lock:
            self.system.run_until(self.system.clock.now_ms + ms)
            return self.system.clock.now_ms

    # --- writes ----------------------------------------------------------------

    def add_device(self, body: dict) -> dict:
        with self.lock:
            self._sync_clock()
            try:
                _check_registration(body)
            except InvalidRegistration as exc:
                raise ApiError(400, str(exc)) from None
            record = self.system.host.devices.get(body["device_id"])
            if record is not None and not record.deleted:
                raise ApiError(
                    409, f"device {body['device_id']} already registered")
            tx_id = self.system.submit_add_device(body)
            return {"tx_id": tx_id, "status": "pending"}

    def update_device(self, device_id: str, body: dict) -> dict:
        with self.lock:
            self._sync_clock()
            body = {**body, "device_id": device_id}
            try:
                _check_registration(body)
            except InvalidRegistration as exc:
                raise ApiError(400, str(exc)) from None
            self._live_device(device_id)
            tx_id = self.system.submit_update_device(body)
            return {"tx_id": tx_id, "status": "pending"}

    def delete_device(self, device_id: str) -> dict:
        with self.lock:
            self._sync_clock()
            self._live_device(device_id)
            tx_id = self.system.submit_delete_device(device_id)
            return {"tx_id": tx_id, "status": "pending"}

    def add_policy(self, device_id: str, body: dict) -> dict:
        with self.lock:
            self._sync_clock()
            self._live_device(device_id)
            try:
                validate_policy_args(body)
            except InvalidPolicy as exc:
                raise ApiError(400, str(exc)) from None
            tx_id = self.system.submit_add_policy(device_id, body)
            return {"tx_id": tx_id, "status": "pending"}

    def update_policy(self, device_id: str, policy_id: str,
                      body: dict) -> dict:
        with self.lock:
            self._sync_clock()
            self._policy(device_id, policy_id)
            try:
                validate_policy_args(body)
            except InvalidPolicy as exc:
                raise ApiError(400, str(exc)) from None
            tx_id = self.system.submit_update_policy(
                device_id, policy_id, body)
            return {"tx_id": tx_id, "status": "pending"}

    def delete_policy(self, device_id: str, policy_id: str) -> dict:
        with self.lock:
            self._sync_clock()
            self._policy(device_id, policy_id)
            tx_id = self.system.submit_delete_policy(device_id, policy_id)
            return {"tx_id": tx_id, "status": "pending"}

    # --- read helpers --------------------------------------------------------------

    def _live_device(self, device_id: str):
        record = self.system.host.devices.get(device_id)
        if record is None or record.deleted:
            raise ApiError(404, f"no device {device_id}")
        return record

    def _policy(self, device_id: str, policy_id: str):
        policy = self.system.host.policies.get(device_id, {}).get(policy_id)
        if policy is None:
            raise ApiError(404, f"no policy {policy_id} on {device_id}")
        return policy

    def _stamped(self, key: str, value) -> dict:
        return {key: value,
                "served_at_height": self.system.ledger.height}

    def get_device(self, device_id: str) -> dict:
        with self.lock:
            self._sync_clock()
            try:
                view = self.system.host.get_device(device_id)
            except UnknownDevice:
                raise ApiError(404, f"no device {device_id}") from None
            return self._stamped("device", view)

    def list_devices(self, include_deleted: bool) -> dict:
        with self.lock:
            self._sync_clock()
            return self._stamped(
                "devices", self.system.host.list_devices(include_deleted))

    def get_policies(self, device_id: str) -> dict:
        with self.lock:
            self._sync_clock()
            try:
                policies = self.system.host.get_policies(device_id)
            except UnknownDevice:
                raise ApiError(404, f"no device {device_id}") from None
            return self._stamped("policies", policies)

    def get_archives(self, device_id: str) -> dict:
        with self.lock:
            self._sync_clock()
            try:
                archives = self.system.host.get_hashes(device_id)
            except UnknownDevice:
                raise ApiError(404, f"no device {device_id}") from None
            return self._stamped("archives", archives)

    def get_history(self, device_id: str, frm: int, to: int) -> dict:
        with self.lock:
            self._sync_clock()
            try:
                view = self.system.history(device_id, frm, to)
            except UnknownDevice:
                raise ApiError(404, f"no device {device_id}") from None
            except InvalidRange as exc:
                raise ApiError(400, str(exc)) from None
            except MissingArchive as exc:
                # anchored digest with no object behind it: an integrity
                # failure on our side, so answer as a bad gateway rather
                # than pretending the range is empty
                raise ApiError(502, str(exc)) from None
            return {**view, "served_at_height": self.system.ledger.height}

    def get_tx(self, tx_id: str) -> dict:
        with self.lock:
            self._sync_clock()
            try:
                tx = self.system.ledger.tx(tx_id)
            except NotFound:
                raise ApiError(404, f"no transaction {tx_id}") from None
            return {
                "tx_id": tx.tx_id,
                "op_kind": tx.op_kind,
                "status": tx.status,
                "submitted_at": tx.submitted_at,
                "gas_used": tx.gas_used,
                "block_height": tx.block_height,
                "error": tx.error,
            }

    def get_archive_object(self, hex_digest: str) -> bytes:
        with self.lock:
            self._sync_clock()
            try:
                digest = hash_from_hex(hex_digest)
            except ValueError as exc:
                raise ApiError(400, str(exc)) from None
            try:
                return self.system.cas.get(digest)
            except NotFound:
                raise ApiError(404, f"no object {hex_digest}") from None

    def status(self) -> dict:
        with self.lock:
            self._sync_clock()
            return {
                "sim_now_ms": self.system.clock.now_ms,
                "block_height": self.system.ledger.height,
                "pending_txs": self.system.ledger.pending_count,
                "devices": len(self.system.host.list_devices()),
                "speed": self.speed,
            }

    def metrics(self) -> dict:
        with self.lock:
            self._sync_clock()
            return self.system.metrics()

    def events_page(self, since: int, limit: int) -> dict:
        with self.lock:
            self._sync_clock()
            page = self.system.journal[since:since + limit]
            return {"events": page, "next": since + len(page)}

    def events_after(self, cursor: int) -> list[dict]:
        with self.lock:
            self._sync_clock()
            return self.system.journal[cursor:]


def create_app(service: Service) -> FastAPI:
    app = FastAPI(title="fogchain", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request: Request,
                                exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    # --- devices -----------------------------------------------------------

    @app.post("/devices", status_code=202)
    async def add_device(body: dict):
        return service.add_device(body)

    @app.get("/devices")
    async def list_devices(include_deleted: bool = False):
        return service.list_devices(include_deleted)

    @app.get("/devices/{device_id}")
    async def get_device(device_id: str):
        return service.get_device(device_id)

    @app.put("/devices/{device_id}", status_code=202)
    async def update_device(device_id: str, body: dict):
        return service.update_device(device_id, body)

    @app.delete("/devices/{device_id}", status_code=202)
    async def delete_device(device_id: str):
        return service.delete_device(device_id)

    # --- policies ------------------------------------------------------------

    @app.get("/devices/{device_id}/policies")
    async def get_policies(device_id: str):
        return service.get_policies(device_id)

    @app.post("/devices/{device_id}/policies", status_code=202)
    async def add_policy(device_id: str, body: dict):
        return service.add_policy(device_id, body)

    @app.put("/devices/{device_id}/policies/{policy_id}", status_code=202)
    async def update_policy(device_id: str, policy_id: str, body: dict):
        return service.update_policy(device_id, policy_id, body)

    @app.delete("/devices/{device_id}/policies/{policy_id}", status_code=202)
    async def delete_policy(device_id: str, policy_id: str):
        return service.delete_policy(device_id, policy_id)

    # --- history and archives ----------------------------------------------------

    @app.get("/devices/{device_id}/history")
    async def get_history(device_id: str,
                          frm: int = Query(alias="from"),
                          to: int = Query()):
        return service.get_history(device_id, frm, to)

    @app.get("/devices/{device_id}/archives")
    async def get_archives(device_id: str):
        return service.get_archives(device_id)

    @app.get("/archives/{hex_digest}")
    async def get_archive_object(hex_digest: str):
        data = service.get_archive_object(hex_digest)
        return Response(content=data, media_type="application/json")

    # --- transactions and telemetry --------------------------------------------------

    @app.get("/tx/{tx_id}")
    async def get_tx(tx_id: str):
        return service.get_tx(tx_id)

    @app.get("/status")
    async def status():
        return service.status()

    @app.get("/metrics")
    async def metrics():
        return service.metrics()

    @app.get("/events")
    async def events(since: int = 0, limit: int = 500):
        if since < 0 or limit < 0:
            raise ApiError(400, "since and limit must be >= 0")
        return service.events_page(since, limit)

    @app.get("/events/stream")
    async def events_stream(since: int = 0,
                            max_events: Optional[int] = None,
                            idle_timeout_s: Optional[float] = None):
        if since < 0:
            raise ApiError(400, "since must be >= 0")

        def generate():
            cursor = since
            sent = 0
            idle_since = time.monotonic()
            while True:
                batch = service.events_after(cursor)
                for entry in batch:
                    cursor = entry["seq"] + 1
                    sent += 1
                    yield (f"id: {entry['seq']}\n"
                           f"event: {entry['kind']}\n"
                           f"data: {canonical_str(entry)}\n\n")
                    if max_events is not None and sent >= max_events:
                        return
                if batch:
                    idle_since = time.monotonic()
                elif (idle_timeout_s is not None
                        and time.monotonic() - idle_since > idle_timeout_s):
                    return
                time.sleep(0.05)

        return StreamingResponse(generate(), media_type="text/event-stream")

    # --- simulation control ---------------------------------------------------------

    @app.post("/sim/advance")
    async def sim_advance(body: dict):
        ms = body.get("ms")
        if isinstance(ms, bool) or not isinstance(ms, int) or ms < 0:
            raise ApiError(400, "ms must be a non-negative integer")
        return {"sim_now_ms": service.advance(ms)}

    return app
