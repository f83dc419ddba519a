"""Scenario and experiment configuration, loaded from JSON.

Every section has defaults except ``grid.n_ue``; :func:`resolve` returns the
configuration with all defaults materialized.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .fec import CodeSpec, fixture_code, read_alist, systematize
from .grid import GridSpec
from .jammer import JammerConfig, PowerAllocation
from .ofdm import OfdmParams
from .rx import CSI_MODES, MITIGATIONS


class ConfigError(ValueError):
    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


@dataclass(frozen=True)
class ChannelConfig:
    type: str = "flat"
    L: int = 1
    decay: float = 1.0
    alpha_ue: float = 1.0
    alpha_jammer: float = 1.0


@dataclass(frozen=True)
class ReceiverConfig:
    mitigation: str = "none"
    csi: str = "estimated"


@dataclass(frozen=True)
class FecConfig:
    enabled: bool = False
    alist_path: str | None = None
    n_iters: int = 20

    def code(self) -> CodeSpec:
        h = read_alist(self.alist_path) if self.alist_path else fixture_code()
        return _systematized(h)


_CODE_CACHE: dict = {}


def _systematized(h):
    key = (h.n, h.dense.tobytes())
    if key not in _CODE_CACHE:
        _CODE_CACHE[key] = systematize(h)
    return _CODE_CACHE[key]


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


@dataclass(frozen=True)
class Scenario:
    grid: GridSpec
    n_rx: int = 16
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    ofdm: OfdmParams | None = None
    jammer: JammerConfig | None = None
    rho_max_db: float | None = None
    rho: tuple | None = None
    receiver: ReceiverConfig = field(default_factory=ReceiverConfig)
    fec: FecConfig = field(default_factory=FecConfig)
    seed: int = 0

    def __post_init__(self):
        if self.n_rx < 1:
            raise ConfigError("n_rx", "must be >= 1")
        if self.channel.type not in ("flat", "tdl"):
            raise ConfigError("channel.type", f"unknown channel type {self.channel.type!r}")
        if self.receiver.mitigation not in MITIGATIONS:
            raise ConfigError("receiver.mitigation", f"must be one of {MITIGATIONS}")
        if self.receiver.csi not in CSI_MODES:
            raise ConfigError("receiver.csi", f"must be one of {CSI_MODES}")
        if self.receiver.mitigation != "none" and self.receiver.csi == "estimated" \
                and self.grid.n_silent == 0:
            raise ConfigError("grid.n_silent", "estimated-CSI mitigation needs silent symbols")
        if self.receiver.mitigation == "pos" and self.receiver.csi == "estimated" \
                and self.grid.n_silent >= self.n_rx:
            raise ConfigError("grid.n_silent", "POS would null every receive dimension")
        if self.jammer is not None and self.jammer.time_domain and self.channel.type != "tdl":
            raise ConfigError("channel.type", "time-domain jammers need a tdl channel")
        if self.rho is not None and len(self.rho) != self.grid.n_symbols:
            raise ConfigError("jammer.rho", f"needs {self.grid.n_symbols} entries")
        if self.time_domain and self.ofdm_params.n_fft < self.grid.n_subcarriers:
            raise ConfigError("ofdm.n_fft", "smaller than the number of subcarriers")

    @property
    def time_domain(self) -> bool:
        return self.channel.type == "tdl"

    @property
    def ofdm_params(self) -> OfdmParams:
        o = self.ofdm or OfdmParams(n_fft=max(64, self.grid.n_subcarriers), cp_len=8)
        return OfdmParams(o.n_fft, o.cp_len, self.grid.n_symbols)

    @property
    def jammed(self) -> bool:
        return self.jammer is not None and (self.rho is not None or self.rho_max_db is not None)

    @property
    def rho_max(self) -> float:
        if self.rho_max_db is not None:
            return float(db2lin(self.rho_max_db))
        if self.rho is not None:
            return float(np.mean(self.rho))
        return 0.0

    def allocation(self) -> PowerAllocation:
        """The configured jammer allocation (uniform at ``rho_max`` unless ``rho`` is given)."""
        if self.rho is not None:
            return PowerAllocation(np.asarray(self.rho, dtype=float), max(self.rho_max, float(np.mean(self.rho))))
        return PowerAllocation.uniform(self.rho_max, self.grid.n_symbols)

    @property
    def code(self) -> CodeSpec | None:
        return self.fec.code() if self.fec.enabled else None

    def replace(self, **kw) -> "Scenario":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return Scenario(**d)


def _section(d: dict, name: str, cls, path: str):
    raw = d.get(name) or {}
    if not isinstance(raw, dict):
        raise ConfigError(path, "must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown field")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(path, str(e)) from None


def scenario_from_dict(d: dict) -> Scenario:
    if "grid" not in d:
        raise ConfigError("grid", "missing required field")
    g = d["grid"]
    if "n_ue" not in g:
        raise ConfigError("grid.n_ue", "missing required field")
    try:
        grid = GridSpec.from_dict(g)
    except (ValueError, TypeError) as e:
        raise ConfigError("grid", str(e)) from None
    jam = d.get("jammer")
    jcfg, rho_max_db, rho = None, None, None
    if jam:
        jam = dict(jam)
        rho_max_db = jam.pop("rho_max_db", None)
        rho = jam.pop("rho", None)
        if rho_max_db is None and rho is None:
            raise ConfigError("jammer.rho_max_db", "missing required field")
        for key in ("symbols", "subcarriers"):
            if key in jam:
                jam[key] = tuple(jam[key])
        jcfg = _section({"j": jam}, "j", JammerConfig, "jammer")
        rho = tuple(float(r) for r in rho) if rho is not None else None
    ofdm = d.get("ofdm")
    try:
        ofdm = OfdmParams(ofdm.get("n_fft", 64), ofdm.get("cp_len", 8), grid.n_symbols) if ofdm else None
    except ValueError as e:
        raise ConfigError("ofdm", str(e)) from None
    return Scenario(
        grid=grid,
        n_rx=int(d.get("n_rx", 16)),
        channel=_section(d, "channel", ChannelConfig, "channel"),
        ofdm=ofdm,
        jammer=jcfg,
        rho_max_db=rho_max_db,
        rho=rho,
        receiver=_section(d, "receiver", ReceiverConfig, "receiver"),
        fec=_section(d, "fec", FecConfig, "fec"),
        seed=int(d.get("seed", 0)),
    )


def scenario_to_dict(s: Scenario) -> dict:
    out = {"seed": s.seed, "grid": s.grid.to_dict(), "n_rx": s.n_rx, "channel": asdict(s.channel)}
    o = s.ofdm_params
    out["ofdm"] = {"n_fft": o.n_fft, "cp_len": o.cp_len}
    if s.jammer is not None:
        j = asdict(s.jammer)
        j["symbols"], j["subcarriers"] = list(j["symbols"]), list(j["subcarriers"])
        j["rho_max_db"] = s.rho_max_db
        j["rho"] = list(s.rho) if s.rho is not None else None
        out["jammer"] = j
    else:
        out["jammer"] = None
    out["receiver"] = asdict(s.receiver)
    out["fec"] = asdict(s.fec)
    return out


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())
