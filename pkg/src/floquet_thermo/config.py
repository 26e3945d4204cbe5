"""Scenario configuration: JSON parsing, validation, defaults and model assembly.

A parsed :class:`ScenarioConfig` is fully resolved: every default is filled
in, CSV side files are read inline and matrices are stored as ``[re, im]``
pairs. Serialising it and parsing the result gives an identical config.
"""
import copy
import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .baths import make_flat_bath, make_ohmic_bath, make_tabulated_bath
from .errors import ConfigError
from .floquet import harmonic_decompose, monodromy, piecewise_constant
from .generators import build_floquet, build_static
from .qubit import (
    DEFAULT_Q, ModulationProfile, QubitModel, build_qubit_bundle, floquet_bundle,
    periodic_hamiltonian,
)

SECTIONS = ("units", "system", "baths", "floquet", "run", "output")
SWEEP_SPECIAL = ("drive_frequency",)


def load_schema():
    text = resources.files(__package__).joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


@dataclass
class ScenarioConfig:
    system: dict
    baths: list
    floquet: dict
    run: dict
    output: dict
    units: str = ""
    source: str = field(default="", compare=False)

    def to_dict(self):
        return {k: copy.deepcopy(getattr(self, k)) for k in SECTIONS}

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @property
    def is_qubit(self):
        return self.system["kind"] == "qubit"

    @property
    def bath_labels(self):
        return [b["label"] for b in self.baths]


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _positive(value, path):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        _fail(path, f"must be a finite number > 0, got {value!r}")
    return float(value)


def _read_pairs(csv_path, base, path):
    p = Path(csv_path)
    if not p.is_absolute():
        p = Path(base) / p
    try:
        with open(p, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        _fail(path, f"cannot read {p}: {exc.strerror}")
    out = []
    for i, r in enumerate(rows):
        try:
            out.append([float(r[0]), float(r[1])])
        except (ValueError, IndexError):
            if i == 0:
                continue  # header row
            _fail(path, f"{p} line {i + 1} is not a numeric pair")
    if len(out) < 2:
        _fail(path, f"{p} needs at least two numeric rows")
    return out


def canonical_matrix(m, path, dim=None):
    try:
        arr = matrix_array(m)
    except (TypeError, ValueError):
        _fail(path, "matrix entries must be numbers or [re, im] pairs in rectangular rows")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        _fail(path, f"matrix must be square, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        _fail(path, f"matrix is {arr.shape[0]}x{arr.shape[0]}, system dim is {dim}")
    if np.max(np.abs(arr - arr.conj().T)) > 1e-12:
        _fail(path, "matrix must be Hermitian")
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def matrix_array(m):
    rows = [[complex(e[0], e[1]) if isinstance(e, (list, tuple)) else complex(e) for e in row]
            for row in m]
    return np.array(rows, dtype=complex)


def _modulation(raw, base):
    path = "system.modulation"
    if raw is None:
        _fail("system", "qubit systems need a 'modulation' section")
    shape = raw["shape"]
    if shape == "tabulated":
        if ("samples" in raw) == ("samples_csv" in raw):
            _fail(path, "tabulated modulation needs exactly one of 'samples' or 'samples_csv'")
        samples = raw.get("samples") or _read_pairs(raw["samples_csv"], base, path + ".samples_csv")
        for key in ("drive_frequency", "amplitude", "phase"):
            if key in raw:
                _fail(f"{path}.{key}", "not used by tabulated modulation")
        try:
            mod = ModulationProfile.tabulated(*zip(*samples))
        except ValueError as exc:
            _fail(path, str(exc))
        # omega0 and period follow from the samples; explicit values must agree
        for key in ("omega0", "period"):
            if key in raw and abs(raw[key] - getattr(mod, key)) > 1e-10:
                _fail(f"{path}.{key}", f"{raw[key]} disagrees with the samples ({getattr(mod, key)})")
        return {"shape": shape, "omega0": mod.omega0, "period": mod.period,
                "samples": [list(map(float, s)) for s in samples]}
    if "samples" in raw or "samples_csv" in raw:
        _fail(path, f"samples are only used by tabulated modulation, not {shape!r}")
    if "omega0" not in raw:
        _fail(path, "missing 'omega0'")
    omega0 = _positive(raw["omega0"], path + ".omega0")
    if ("period" in raw) == ("drive_frequency" in raw):
        _fail(path, "give exactly one of 'period' or 'drive_frequency'")
    if "period" in raw:
        period = _positive(raw["period"], path + ".period")
    else:
        period = 2 * math.pi / _positive(raw["drive_frequency"], path + ".drive_frequency")
    out = {"shape": shape, "omega0": omega0, "period": period}
    if shape == "sinusoidal":
        out["amplitude"] = float(raw.get("amplitude", 0.0))
        out["phase"] = float(raw.get("phase", 0.0))
    else:
        for key in ("amplitude", "phase"):
            if key in raw:
                _fail(f"{path}.{key}", f"only used by sinusoidal modulation, not {shape!r}")
    try:
        profile_from(out)
    except ValueError as exc:
        _fail(path, str(exc))
    return out


def profile_from(mod):
    if mod["shape"] == "tabulated":
        return ModulationProfile.tabulated(*zip(*mod["samples"]))
    return ModulationProfile(mod["omega0"], mod["period"], mod["shape"],
                             mod.get("amplitude", 0.0), mod.get("phase", 0.0))


def _bath(raw, i, base):
    label = raw["label"]
    path = f"baths[{i}] (bath '{label}')"
    out = {"label": label, "model": raw["model"],
           "temperature": _positive(raw["temperature"], path + ".temperature")}
    model = raw["model"]
    allowed = {"flat": {"gamma0"}, "ohmic": {"gamma0", "cutoff"},
               "tabulated": {"table", "table_csv"}}[model]
    for key in ("gamma0", "cutoff", "table", "table_csv"):
        if key in raw and key not in allowed:
            _fail(f"{path}.{key}", f"not used by the {model!r} bath model")
    if model in ("flat", "ohmic"):
        out["gamma0"] = _positive(raw.get("gamma0", float("nan")), path + ".gamma0")
    if model == "ohmic":
        out["cutoff"] = _positive(raw.get("cutoff", float("nan")), path + ".cutoff")
    if model == "tabulated":
        if ("table" in raw) == ("table_csv" in raw):
            _fail(path, "tabulated bath needs exactly one of 'table' or 'table_csv'")
        table = raw.get("table") or _read_pairs(raw["table_csv"], base, path + ".table_csv")
        out["table"] = [list(map(float, r)) for r in table]
        try:
            bath_from(out)
        except ValueError as exc:
            _fail(path, str(exc))
    return out


def bath_from(b):
    if b["model"] == "flat":
        return make_flat_bath(b["label"], b["temperature"], b["gamma0"])
    if b["model"] == "ohmic":
        return make_ohmic_bath(b["label"], b["temperature"], b["gamma0"], b["cutoff"])
    w, g = zip(*b["table"])
    return make_tabulated_bath(b["label"], b["temperature"], w, g)


def _generic_system(raw, labels):
    if "modulation" in raw:
        _fail("system.modulation", "only used by qubit systems")
    for key in ("dim", "hamiltonian", "couplings"):
        if key not in raw:
            _fail("system", f"generic systems need {key!r}")
    dim = raw["dim"]
    h = raw["hamiltonian"]
    if h["form"] == "constant":
        if "matrix" not in h or "segments" in h:
            _fail("system.hamiltonian", "constant form takes 'matrix' only")
        ham = {"form": "constant",
               "matrix": canonical_matrix(h["matrix"], "system.hamiltonian.matrix", dim)}
    else:
        if "segments" not in h or "matrix" in h:
            _fail("system.hamiltonian", "piecewise_constant form takes 'segments' only")
        segs = []
        for k, seg in enumerate(h["segments"]):
            p = f"system.hamiltonian.segments[{k}]"
            segs.append({"duration": _positive(seg["duration"], p + ".duration"),
                         "matrix": canonical_matrix(seg["matrix"], p + ".matrix", dim)})
        ham = {"form": "piecewise_constant", "segments": segs}
    couplings = raw["couplings"]
    if sorted(couplings) != sorted(labels):
        _fail("system.couplings", f"need one coupling per bath; baths {sorted(labels)}, "
                                  f"couplings {sorted(couplings)}")
    cps = {lab: canonical_matrix(couplings[lab], f"system.couplings.{lab}", dim) for lab in labels}
    return {"kind": "generic", "dim": dim, "hamiltonian": ham, "couplings": cps}


def _rho0(raw, dim):
    if isinstance(raw, str):
        ok = raw in ("excited", "ground", "maximally_mixed")
        if raw.startswith("basis:"):
            try:
                ok = 0 <= int(raw[6:]) < dim
            except ValueError:
                ok = False
        if not ok:
            _fail("run.rho0", f"unknown state {raw!r}; use excited, ground, maximally_mixed, "
                              f"basis:<k> or a matrix")
        return raw
    return canonical_matrix(raw, "run.rho0", dim)


def _check_sweep_parameter(param, cfg):
    if param in SWEEP_SPECIAL:
        if cfg["system"]["kind"] != "qubit" or cfg["system"]["modulation"]["shape"] == "tabulated":
            _fail("run.sweep.parameter", "drive_frequency sweeps need a non-tabulated qubit")
        return
    parts = param.split(".")
    if len(parts) == 3 and parts[0] == "baths":
        bath = next((b for b in cfg["baths"] if b["label"] == parts[1]), None)
        if bath is not None and parts[2] in bath and parts[2] not in ("label", "model", "table"):
            return
    if len(parts) == 3 and parts[:2] == ["system", "modulation"]:
        mod = cfg["system"].get("modulation") or {}
        if parts[2] in ("omega0", "period", "amplitude", "phase") and parts[2] in mod:
            return
    _fail("run.sweep.parameter", f"cannot sweep {param!r}; use drive_frequency, "
                                 f"baths.<label>.<key> or system.modulation.<key>")


def config_from_dict(data, base_dir="."):
    """Validate ``data`` against the schema and resolve defaults."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path)
        raise ConfigError(f"config{where}: {e.message}")

    baths = [_bath(b, i, base_dir) for i, b in enumerate(data["baths"])]
    labels = [b["label"] for b in baths]
    if len(set(labels)) != len(labels):
        _fail("baths", f"labels must be unique, got {labels}")

    raw_sys = data["system"]
    if raw_sys["kind"] == "qubit":
        for key in ("dim", "hamiltonian", "couplings"):
            if key in raw_sys:
                _fail(f"system.{key}", "only used by generic systems")
        system = {"kind": "qubit", "route": raw_sys.get("route", "analytic"),
                  "modulation": _modulation(raw_sys.get("modulation"), base_dir)}
        dim = 2
    else:
        if "route" in raw_sys:
            _fail("system.route", "only used by qubit systems")
        system = _generic_system(raw_sys, labels)
        dim = system["dim"]

    fq = data.get("floquet", {})
    if system["kind"] == "qubit":
        q_default = DEFAULT_Q[system["modulation"]["shape"]]
    else:
        q_default = 31
    floquet = {"Q": fq.get("Q", q_default),
               "steps_per_period": fq.get("steps_per_period", 1024),
               "grid_N": fq.get("grid_N"),
               "branch": fq.get("branch", "folded"),
               "tolerance": _positive(fq.get("tolerance", 1e-6), "floquet.tolerance"),
               "allow_zero_frequency": fq.get("allow_zero_frequency", False)}
    driven = (system["kind"] == "generic" and system["hamiltonian"]["form"] != "constant") or (
        system["kind"] == "qubit" and system["route"] == "generic")
    if driven and floquet["Q"] < 1:
        _fail("floquet.Q", "numerical Floquet decompositions need Q >= 1")
    if floquet["grid_N"] is not None and floquet["grid_N"] < 4 * floquet["Q"] + 4:
        _fail("floquet.grid_N", f"must be >= 4Q+4 = {4 * floquet['Q'] + 4}")

    rr = data.get("run", {})
    run = {"mode": rr.get("mode", "steady"),
           "rho0": _rho0(rr.get("rho0", "excited"), dim),
           "t_end": _positive(rr.get("t_end", 100.0), "run.t_end"),
           "dt": _positive(rr.get("dt", 1.0), "run.dt"),
           "sweep": None,
           "workers": rr.get("workers", 1)}
    if rr.get("sweep") is not None:
        run["sweep"] = {"parameter": rr["sweep"]["parameter"],
                        "values": [float(v) for v in rr["sweep"]["values"]]}
    out = data.get("output", {})
    output = {"directory": out.get("directory", "out"),
              "formats": list(out.get("formats", ["json", "csv"]))}
    cfg = ScenarioConfig(system, baths, floquet, run, output, data.get("units", ""))
    if run["sweep"] is not None:
        _check_sweep_parameter(run["sweep"]["parameter"], cfg.to_dict())
    elif run["mode"] == "sweep":
        _fail("run.sweep", "sweep mode needs a 'sweep' section")
    return cfg


def parse_config(path):
    """Read and validate a JSON scenario file."""
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except OSError as exc:
        raise ConfigError(f"{p}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a JSON object")
    cfg = config_from_dict(data, p.parent)
    cfg.source = str(p)
    return cfg


def with_parameter(cfg, param, value):
    """Copy of ``cfg`` with one sweep parameter set to ``value``."""
    d = cfg.to_dict()
    if param == "drive_frequency":
        d["system"]["modulation"]["period"] = 2 * math.pi / value
    elif param.startswith("baths."):
        _, label, key = param.split(".")
        next(b for b in d["baths"] if b["label"] == label)[key] = value
    else:
        d["system"]["modulation"][param.split(".")[2]] = value
    d["run"].pop("sweep")
    d["run"]["mode"] = "steady"
    return config_from_dict(d)


@dataclass
class Scenario:
    """Assembled model: generator bundle plus what is needed to report on it."""

    bundle: object
    hamiltonian: object
    dim: int
    model: object = None
    units: str = ""


def build_scenario(cfg):
    baths = [bath_from(b) for b in cfg.baths]
    fq = cfg.floquet
    if cfg.is_qubit:
        mod = profile_from(cfg.system["modulation"])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = QubitModel(mod, tuple(baths), fq["Q"])
        if cfg.system["route"] == "analytic":
            bundle = build_qubit_bundle(model)
        else:
            bundle = floquet_bundle(model, fq["grid_N"], fq["branch"])
        return Scenario(bundle, periodic_hamiltonian(mod), 2, model, cfg.units)
    h = cfg.system["hamiltonian"]
    cps = [(matrix_array(cfg.system["couplings"][b.label]), b) for b in baths]
    if h["form"] == "constant":
        hm = matrix_array(h["matrix"])
        return Scenario(build_static(hm, cps), hm, cfg.system["dim"], None, cfg.units)
    ph = piecewise_constant([matrix_array(s["matrix"]) for s in h["segments"]],
                            [s["duration"] for s in h["segments"]])
    mono = monodromy(ph, fq["steps_per_period"], fq["branch"])
    decs = [(harmonic_decompose(s, ph, fq["Q"], fq["grid_N"], fq["steps_per_period"], mono,
                                tolerance=fq["tolerance"]), b) for s, b in cps]
    bundle = build_floquet(decs, allow_zero_frequency=fq["allow_zero_frequency"])
    return Scenario(bundle, ph, cfg.system["dim"], None, cfg.units)


def initial_state(spec, scenario):
    d = scenario.dim
    if not isinstance(spec, str):
        return matrix_array(spec)
    if spec == "maximally_mixed":
        return np.eye(d, dtype=complex) / d
    if spec == "excited":
        k = _level(scenario, -1)
    elif spec == "ground":
        k = _level(scenario, 0)
    else:
        k = int(spec[6:])
    rho = np.zeros((d, d), dtype=complex)
    rho[k, k] = 1
    return rho


def _level(scenario, which):
    """Basis index of the lowest (``0``) or highest (``-1``) diagonal entry of the reference Hamiltonian."""
    diag = np.real(np.diag(scenario.bundle.hamiltonian))
    return int(np.argsort(diag, kind="stable")[which])
