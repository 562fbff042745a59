"""INI run configuration: schema, validation, and builders for operators and families."""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .hamiltonian import MORSE_OH, PauliSum, build_heisenberg, build_hubbard, build_morse_grid
from .optim import OptimizerConfig

EXPERIMENTS = ("heisenberg", "morse", "hubbard", "custom")
FAMILIES = ("dense", "mps", "quantics_tt", "circuit")


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options):
    def parse(text):
        text = text.strip()
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise ValueError(f"expected a positive integer, got {value}")
    return value


def _finite(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {text!r}")
    return value


def _positive(text):
    value = _finite(text)
    if value <= 0:
        raise ValueError(f"expected a positive number, got {value}")
    return value


def _nonnegative(text):
    value = _finite(text)
    if value < 0:
        raise ValueError(f"expected a nonnegative number, got {value}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise ValueError(f"expected a nonnegative integer, got {value}")
    return value


_SYSTEM_COMMON = {"experiment": (_choice(*EXPERIMENTS), None)}
_SYSTEM = {
    "heisenberg": {"n": (_positive_int, None), "jx": (_finite, 1.0), "jy": (_finite, 1.0),
                   "jz": (_finite, 1.0), "hz": (_finite, 0.0), "periodic": (_bool, True)},
    "morse": {"nd": (_positive_int, None), "x_min": (_finite, 0.0), "x_max": (_finite, 10.0),
              "de": (_positive, MORSE_OH["de"]), "am": (_positive, MORSE_OH["am"]),
              "re": (_finite, MORSE_OH["re"]), "mu": (_positive, MORSE_OH["mu"])},
    "hubbard": {"lx": (_positive_int, None), "ly": (_positive_int, 1), "t": (_finite, 1.0),
                "u": (_finite, 4.0), "ordering": (_choice("spin_major", "site_major"), "spin_major")},
    "custom": {"hamiltonian_file": (str, None)},
}
_ANSATZ = {
    "family": (_choice(*FAMILIES), None),
    "bond_dim": (_positive_int, None),
    "boundary": (_choice("open", "periodic"), "periodic"),
    "complex": (_bool, False),
    "depth": (_positive_int, None),
}
_RUN = {
    "ns": (_positive_int, None),
    "init_sigma": (_positive, None),
    "seed": (_nonneg_int, 0),
    "trials": (_positive_int, 1),
    "output_dir": (str, "runs/out"),
    "jitter": (_nonnegative, 0.0),
    "cond_limit": (_positive, 1e12),
    "audit_every": (_nonneg_int, 0),
    "audit_tol": (_positive, 1e-10),
    "oracle": (_bool, True),
}
_OPTIMIZER = {
    "memory": (_positive_int, 10),
    "max_steps": (_nonneg_int, 1000),
    "wolfe_c1": (_positive, 1e-4),
    "wolfe_c2": (_positive, 0.9),
    "grad_tol": (_positive, 1e-9),
    "max_linesearch": (_positive_int, 40),
}

# default initialization width per experiment when init_sigma is omitted
DEFAULT_SIGMA = {"heisenberg": 1.0, "morse": 0.5, "hubbard": 0.1, "custom": 0.5}


@dataclass
class RunConfig:
    system: dict
    ansatz: dict
    run: dict
    optimizer: OptimizerConfig
    text: str = ""
    source: str | None = None
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def experiment(self):
        return self.system["experiment"]

    def as_dict(self):
        """Parsed values; the output location is left out since it never changes a number."""
        run = {k: v for k, v in self.run.items() if k != "output_dir"}
        return {"system": dict(self.system), "ansatz": dict(self.ansatz), "run": run,
                "optimizer": dict(vars(self.optimizer))}


def _section(parser, name, schema, label=None):
    label = label or name
    raw = dict(parser.items(name)) if parser.has_section(name) else {}
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{label}]: {', '.join(unknown)}")
    out = {}
    for key, (parse, default) in schema.items():
        if key in raw:
            try:
                out[key] = parse(raw[key])
            except ValueError as exc:
                raise ConfigError(f"[{label}] {key}: {exc}") from None
        elif default is not None:
            out[key] = default
    return out


def parse_config(text, source=None, base_dir=None):
    """Parse and validate config text; raises ``ConfigError`` on any problem."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                       default_section="__none__")
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    extra = sorted(set(parser.sections()) - {"system", "ansatz", "run", "optimizer"})
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(extra)}")
    if not parser.has_option("system", "experiment"):
        raise ConfigError("[system] experiment is required")
    experiment = parser.get("system", "experiment").strip()
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"[system] experiment must be one of {', '.join(EXPERIMENTS)}")
    system = _section(parser, "system", {**_SYSTEM_COMMON, **_SYSTEM[experiment]})
    ansatz = _section(parser, "ansatz", _ANSATZ)
    run = _section(parser, "run", _RUN)
    opt = _section(parser, "optimizer", _OPTIMIZER)

    for key in _SYSTEM[experiment]:
        if key not in system:
            raise ConfigError(f"[system] {key} is required for experiment {experiment}")
    for key in ("family",):
        if key not in ansatz:
            raise ConfigError(f"[ansatz] {key} is required")
    family = ansatz["family"]
    if family in ("mps", "quantics_tt") and "bond_dim" not in ansatz:
        raise ConfigError(f"[ansatz] bond_dim is required for family {family}")
    if family == "circuit" and "depth" not in ansatz:
        raise ConfigError("[ansatz] depth is required for family circuit")
    if "ns" not in run:
        raise ConfigError("[run] ns is required")
    run.setdefault("init_sigma", DEFAULT_SIGMA[experiment])
    if family == "quantics_tt" and experiment != "morse":
        raise ConfigError("family quantics_tt needs experiment morse")
    if experiment == "morse":
        if system["nd"] < 4:
            raise ConfigError("[system] nd must be at least 4")
        if system["x_max"] <= system["x_min"]:
            raise ConfigError("[system] x_max must exceed x_min")
        if family == "circuit":
            raise ConfigError("family circuit is not supported for experiment morse")
    try:
        optimizer = OptimizerConfig(**opt)
    except ValueError as exc:
        raise ConfigError(f"[optimizer] {exc}") from None
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    cfg = RunConfig(system, ansatz, run, optimizer, text, source, base)
    dim = system_dim(cfg)
    if run["ns"] > dim:
        raise ConfigError(f"[run] ns={run['ns']} exceeds the Hilbert space dimension {dim}")
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, source=str(path), base_dir=path.parent)


def _n_qubits(cfg):
    s = cfg.system
    if cfg.experiment == "heisenberg":
        return s["n"]
    if cfg.experiment == "morse":
        return s["nd"]
    if cfg.experiment == "hubbard":
        return 2 * s["lx"] * s["ly"]
    return custom_hamiltonian(cfg).n_sites


def system_dim(cfg):
    n = _n_qubits(cfg)
    if n > 30:
        raise ConfigError(f"{n} qubits is beyond dense-state scale")
    return 1 << n


def custom_hamiltonian(cfg):
    path = Path(cfg.system["hamiltonian_file"])
    if not path.is_absolute():
        path = cfg.base_dir / path
    try:
        return PauliSum.from_text(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read Hamiltonian file {path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"bad Hamiltonian file {path}: {exc}") from None


def build_operator(cfg):
    s = cfg.system
    if cfg.experiment == "heisenberg":
        return build_heisenberg(s["n"], s["jx"], s["jy"], s["jz"], s["hz"], s["periodic"])
    if cfg.experiment == "morse":
        return build_morse_grid(s["nd"], s["x_min"], s["x_max"], s["de"], s["am"], s["re"], s["mu"])
    if cfg.experiment == "hubbard":
        return build_hubbard(s["lx"], s["ly"], s["t"], s["u"], s["ordering"])
    return custom_hamiltonian(cfg)


def build_family(cfg):
    from .ansatz import MPS, CircuitAnsatz, DenseTable, quantics_tt

    a = cfg.ansatz
    n = _n_qubits(cfg)
    family = a["family"]
    if family == "dense":
        return DenseTable(1 << n)
    if family == "mps":
        return MPS(n, a["bond_dim"], boundary=a["boundary"], complex_cores=a["complex"])
    if family == "quantics_tt":
        return quantics_tt(n, a["bond_dim"], complex_cores=a["complex"])
    return CircuitAnsatz(n, a["depth"])
