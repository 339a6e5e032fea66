"""Simulated device fleet.

Every reading is a pure function of (device seed, attribute, timestamp),
derived by hashing those three into an RNG seed. Polling the same device
at the same simulated time always returns the same value, which is what
makes whole runs reproducible and lets tests recompute expected readings
independently of the polling schedule.

The gateway fronts the fleet the way the field network would: polls can
time out (an unreachable draw is itself seeded), and every reading it
does serve is also appended to a ground-truth log that pipeline tests
compare against.
"""

import hashlib
import random
from dataclasses import dataclass, field
from typing import Optional

from .errors import DeviceTimeout, UnknownAttribute, UnknownDevice
from .tsdb import Sample

GEN_CONSTANT = "constant"
GEN_UNIFORM = "uniform"
GEN_GAUSSIAN = "gaussian"
GEN_RAMP = "ramp"

BENCHMARKS = {"B1": 50, "B2": 100, "B3": 150, "B4": 200}

MODELS = ("sensor-mk1", "sensor-mk2", "thermo-x2", "hygro-m1")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: dict = field(default_factory=dict)


def derive_device_seed(master_seed: int, device_id: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{device_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _draw_rng(device_seed: int, salt: str, t_ms: int) -> random.Random:
    digest = hashlib.sha256(
        f"{device_seed}:{salt}:{t_ms}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def value_at(spec: GeneratorSpec, device_seed: int, attribute: str,
             t_ms: int) -> float:
    """Reading for one attribute at one instant. Pure."""
    p = spec.params
    if spec.kind == GEN_CONSTANT:
        return float(p.get("value", 0.0))
    if spec.kind == GEN_RAMP:
        return float(p.get("start", 0.0)) + float(p.get("rate_per_s", 0.0)) * (t_ms / 1000.0)
    rng = _draw_rng(device_seed, f"val:{attribute}", t_ms)
    if spec.kind == GEN_UNIFORM:
        return rng.uniform(float(p.get("low", 0.0)), float(p.get("high", 1.0)))
    if spec.kind == GEN_GAUSSIAN:
        return rng.gauss(float(p.get("mean", 0.0)), float(p.get("stddev", 1.0)))
    raise ValueError(f"unknown generator kind {spec.kind!r}")


@dataclass
class DeviceSpec:
    device_id: str
    ip_address: str
    model: str
    polling_interval: int  # seconds
    target_attributes: list
    credentials: str
    generators: dict       # attribute -> GeneratorSpec
    seed: int
    reachability: float = 1.0

    def registration(self) -> dict:
        """Args for the registry contract's add/update operations."""
        return {
            "device_id": self.device_id,
            "ip_address": self.ip_address,
            "model": self.model,
            "polling_interval": self.polling_interval,
            "target_attributes": list(self.target_attributes),
            "credentials": self.credentials,
        }


class DeviceGateway:
    """Poll access to the fleet, plus the served-readings ground truth."""

    def __init__(self):
        self._devices: dict[str, DeviceSpec] = {}
        self.served: list[Sample] = []
        self.timeouts = 0

    def attach(self, spec: DeviceSpec) -> None:
        self._devices[spec.device_id] = spec

    def detach(self, device_id: str) -> None:
        self._devices.pop(device_id, None)

    def device_ids(self) -> list[str]:
        return sorted(self._devices)

    def poll(self, device_id: str, attributes: list,
             t_ms: int) -> dict[str, float]:
        spec = self._devices.get(device_id)
        if spec is None:
            raise UnknownDevice(device_id)
        if spec.reachability < 1.0:
            draw = _draw_rng(spec.seed, "reach", t_ms).random()
            if draw >= spec.reachability:
                self.timeouts += 1
                raise DeviceTimeout(f"{device_id} at {t_ms}")
        out = {}
        for attribute in attributes:
            gen = spec.generators.get(attribute)
            if gen is None:
                raise UnknownAttribute(f"{device_id} has no {attribute!r}")
            value = value_at(gen, spec.seed, attribute, t_ms)
            out[attribute] = value
            self.served.append(Sample(device_id, attribute, value, t_ms))
        return out


def default_generators(attributes: list) -> dict:
    # gaussian around 15 keeps a Minimum-10 policy busy without drowning it
    return {a: GeneratorSpec(GEN_GAUSSIAN, {"mean": 15.0, "stddev": 5.0})
            for a in attributes}


def spawn_fleet(count: int, master_seed: int,
                polling_interval: int = 60,
                attributes: tuple = ("temperature",),
                reachability: float = 1.0) -> list[DeviceSpec]:
    """Deterministic fleet: ids, addresses and models vary with index."""
    fleet = []
    for i in range(1, count + 1):
        device_id = f"device-{i:04d}"
        seed = derive_device_seed(master_seed, device_id)
        cred = hashlib.sha256(
            f"{master_seed}:cred:{device_id}".encode()).hexdigest()[:16]
        fleet.append(DeviceSpec(
            device_id=device_id,
            ip_address=f"10.{(i >> 16) & 255}.{(i >> 8) & 255}.{i & 255}",
            model=MODELS[(i - 1) % len(MODELS)],
            polling_interval=polling_interval,
            target_attributes=list(attributes),
            credentials=f"tok-{cred}",
            generators=default_generators(list(attributes)),
            seed=seed,
            reachability=reachability,
        ))
    return fleet


def fleet_for_benchmark(benchmark: str, master_seed: int,
                        polling_interval: int = 60) -> list[DeviceSpec]:
    try:
        count = BENCHMARKS[benchmark]
    except KeyError:
        raise ValueError(
            f"unknown benchmark {benchmark!r}, pick one of "
            f"{sorted(BENCHMARKS)}") from None
    return spawn_fleet(count, master_seed, polling_interval)


def load_fleet_file(path, master_seed: int) -> list[DeviceSpec]:
    """Fleet from a JSON file: a list of device objects.

    Each object needs device_id/ip_address/model/polling_interval/
    target_attributes/credentials, may carry reachability and a
    generators map {attribute: {kind, params}}.
    """
    import json
    from pathlib import Path

    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, list):
        raise ValueError("fleet file must hold a JSON list")
    fleet = []
    for obj in raw:
        attrs = list(obj["target_attributes"])
        gens = {}
        for attr, g in (obj.get("generators") or {}).items():
            gens[attr] = GeneratorSpec(g["kind"], dict(g.get("params", {})))
        for attr in attrs:
            gens.setdefault(attr, GeneratorSpec(
                GEN_GAUSSIAN, {"mean": 15.0, "stddev": 5.0}))
        fleet.append(DeviceSpec(
            device_id=obj["device_id"],
            ip_address=obj["ip_address"],
            model=obj["model"],
            polling_interval=int(obj["polling_interval"]),
            target_attributes=attrs,
            credentials=obj["credentials"],
            generators=gens,
            seed=derive_device_seed(master_seed, obj["device_id"]),
            reachability=float(obj.get("reachability", 1.0)),
        ))
    return fleet
