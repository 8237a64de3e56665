"""Configuration-driven experiment sweeps with CSV/JSON reports.

Each sweep produces one row per grid point with a fixed, versioned column
set. Rows are deterministic for a given config and seed; the wall-time
column is the only field allowed to differ between identical runs and is
therefore placed last.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channels import (
    CompressionScheme,
    make_scheme,
    pure_roundtrip_overlaps,
    roundtrip_entanglement_fidelity,
)
from .counting import pow2_floor
from .fidelity import fidelity
from .linalg import density_spectrum
from .sources import (
    DENSE_CAP_DEFAULT,
    IIDSource,
    RotatedMarkovSource,
    SourceModel,
    WORD_CAP_BITS_DEFAULT,
    block_state,
    class_spectrum,
    entropy_rate_exact,
)
from .typicality import high_prob_subspace, ky_fan_mass, typical_projector

REPORT_SCHEMA = "qaeplab.report.v1"

COLUMNS = (
    "experiment", "n", "epsilon", "rate_target", "entropy_rate",
    "min_log2dim_per_site", "typical_mass", "typical_log2dim_per_site",
    "rate", "rate_qubits", "fe", "fe_lower_bound", "fbar_eigen", "f_out",
    "fs_lower", "fs_upper", "six_ky_fan", "status", "reason", "wall_time_s",
)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class InvariantError(RuntimeError):
    """A value about to be emitted violates a checked bound."""


@dataclass
class ReportRow:
    experiment: str
    n: int
    epsilon: float | None = None
    rate_target: float | None = None
    entropy_rate: float | None = None
    min_log2dim_per_site: float | None = None
    typical_mass: float | None = None
    typical_log2dim_per_site: float | None = None
    rate: float | None = None
    rate_qubits: float | None = None
    fe: float | None = None
    fe_lower_bound: float | None = None
    fbar_eigen: float | None = None
    f_out: float | None = None
    fs_lower: float | None = None
    fs_upper: float | None = None
    six_ky_fan: float | None = None
    status: str = "ok"
    reason: str | None = None
    wall_time_s: float | None = None

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in COLUMNS}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

DEFAULT_CONFIG: dict = {
    "source": {"kind": "iid", "probs": [0.9, 0.1]},
    "n_list": [2, 4, 6, 8],
    "epsilon_list": [0.1, 0.3],
    "target_rates": [0.25],
    "dense_cap": DENSE_CAP_DEFAULT,
    "word_cap_bits": WORD_CAP_BITS_DEFAULT,
    "seed": 7,
    "out_dir": "out",
    "format": "csv",
    "workers": 1,
    "compress": {"c": 1.0, "eps_min": 0.01},
    "validate": {"fidelity_trials": 1000, "relative_entropy_trials": 200},
}


@dataclass(frozen=True)
class ExperimentConfig:
    source: dict
    n_list: tuple[int, ...]
    epsilon_list: tuple[float, ...]
    target_rates: tuple[float, ...]
    dense_cap: int = DENSE_CAP_DEFAULT
    word_cap_bits: int = WORD_CAP_BITS_DEFAULT
    seed: int = 7
    out_dir: str = "out"
    format: str = "csv"
    workers: int = 1
    compress_c: float = 1.0
    compress_eps_min: float = 0.01
    fidelity_trials: int = 1000
    relative_entropy_trials: int = 200

    def build_source(self) -> SourceModel:
        return build_source(self.source)


def _complex_matrix(obj) -> np.ndarray:
    """Nested [re, im] pairs -> complex matrix."""
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cannot parse complex matrix: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigError("complex matrices are written as square nested [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


_NAMED_ROTATIONS = {
    "identity": lambda d: np.eye(d, dtype=complex),
    "hadamard": lambda d: _hadamard(d),
}


def _hadamard(d: int) -> np.ndarray:
    if d != 2:
        raise ConfigError("the named hadamard rotation is a qubit rotation (d=2)")
    return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)


def build_source(spec: dict) -> SourceModel:
    """Build a source model from its configuration dictionary."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("source spec must be a dict with a 'kind' key")
    kind = spec["kind"]
    try:
        if kind == "iid":
            if "probs" in spec:
                probs = np.asarray(spec["probs"], dtype=float)
                state = np.diag(probs).astype(complex)
            elif "state" in spec:
                state = _complex_matrix(spec["state"])
            else:
                raise ConfigError("iid source needs 'probs' or 'state'")
            return IIDSource(site_state=state)
        if kind == "rotated_markov":
            if "transition" not in spec:
                raise ConfigError("rotated_markov source needs a 'transition' matrix")
            transition = np.asarray(spec["transition"], dtype=float)
            rotation = spec.get("rotation", "identity")
            if isinstance(rotation, str):
                if rotation not in _NAMED_ROTATIONS:
                    raise ConfigError(f"unknown rotation name {rotation!r}")
                rotation = _NAMED_ROTATIONS[rotation](transition.shape[0])
            else:
                rotation = _complex_matrix(rotation)
            start = spec.get("start_dist")
            return RotatedMarkovSource(transition=transition, rotation=rotation,
                                       start_dist=None if start is None else np.asarray(start, dtype=float))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid source parameters: {exc}") from exc
    raise ConfigError(f"unknown source kind {kind!r}")


def config_from_dict(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    merged = json.loads(json.dumps(DEFAULT_CONFIG))  # deep copy
    for key, value in raw.items():
        if key in ("compress", "validate") and isinstance(value, dict):
            merged[key].update(value)
        else:
            merged[key] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    unknown = set(merged) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    try:
        cfg = ExperimentConfig(
            source=merged["source"],
            n_list=tuple(int(n) for n in merged["n_list"]),
            epsilon_list=tuple(float(e) for e in merged["epsilon_list"]),
            target_rates=tuple(float(r) for r in merged["target_rates"]),
            dense_cap=int(merged["dense_cap"]),
            word_cap_bits=int(merged["word_cap_bits"]),
            seed=int(merged["seed"]),
            out_dir=str(merged["out_dir"]),
            format=str(merged["format"]),
            workers=int(merged["workers"]),
            compress_c=float(merged["compress"]["c"]),
            compress_eps_min=float(merged["compress"]["eps_min"]),
            fidelity_trials=int(merged["validate"]["fidelity_trials"]),
            relative_entropy_trials=int(merged["validate"]["relative_entropy_trials"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    if list(cfg.n_list) != sorted(cfg.n_list) or any(n < 1 for n in cfg.n_list):
        raise ConfigError("n_list must be ascending positive integers")
    if any(not 0.0 < e < 1.0 for e in cfg.epsilon_list):
        raise ConfigError("epsilons must lie in (0, 1)")
    if cfg.format not in ("csv", "json"):
        raise ConfigError("format must be 'csv' or 'json'")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    source = cfg.build_source()  # validates source parameters
    max_rate = math.log2(source.site_dim)
    if any(not 0.0 < r <= max_rate + 1e-12 for r in cfg.target_rates):
        raise ConfigError(f"target rates must lie in (0, log2 d] = (0, {max_rate:g}]")
    return cfg


def load_config(path: str | Path | None, overrides: dict | None = None) -> ExperimentConfig:
    if path is None:
        return config_from_dict({}, overrides)
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw, overrides)


# ---------------------------------------------------------------------------
# sweep helpers
# ---------------------------------------------------------------------------

def _timed(fn, *args):
    start = time.perf_counter()
    row = fn(*args)
    row.wall_time_s = time.perf_counter() - start
    return row


def _map_rows(fn, items, workers: int) -> list[ReportRow]:
    if workers <= 1 or len(items) <= 1:
        return [_timed(fn, *item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_timed, fn, *item) for item in items]
        return [f.result() for f in futures]


def _skip_row(experiment: str, n: int, exc: ValueError, **kw) -> ReportRow:
    reason = "dense_cap_exceeded" if "dense cap" in str(exc) else "spectral_path_infeasible"
    return ReportRow(experiment=experiment, n=n, status="skipped", reason=reason, **kw)


def _check_chain(row: ReportRow, tol: float = 1e-9) -> None:
    """Re-check emitted fidelities against F_e <= Fbar <= F before writing."""
    vals = (row.fe, row.fbar_eigen, row.f_out)
    if any(v is None for v in vals):
        return
    if not (row.fe <= row.fbar_eigen + tol and row.fbar_eigen <= row.f_out + tol):
        raise InvariantError(
            f"fidelity chain violated in row n={row.n}: "
            f"F_e={row.fe!r}, Fbar={row.fbar_eigen!r}, F={row.f_out!r}"
        )


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------

def run_aep(config: ExperimentConfig) -> list[ReportRow]:
    """Typicality sweep: minimal high-probability log-dims and typical masses."""
    source = config.build_source()
    s = entropy_rate_exact(source)

    def one(n: int, eps: float) -> ReportRow:
        try:
            spec = class_spectrum(source, n, word_cap_bits=config.word_cap_bits)
        except ValueError as exc:
            return _skip_row("aep", n, exc, epsilon=eps, entropy_rate=s)
        hp = high_prob_subspace(spec, eps)
        ts = typical_projector(spec, n, s, eps)
        row = ReportRow(
            experiment="aep", n=n, epsilon=eps, entropy_rate=s,
            min_log2dim_per_site=hp.log2_dim / n,
            typical_mass=ts.mass,
            typical_log2dim_per_site=(ts.log2_dim / n) if ts.dim_count else None,
        )
        if ts.dim_count:
            # window sandwich: mass * 2^{n(s-eps)} - 1 <= dim <= 2^{n(s+eps)} + 1
            upper_ok = ts.log2_dim <= n * (s + eps) + 1e-9 or ts.dim_count <= pow2_floor(n * (s + eps)) + 1
            lower_ok = ts.mass <= 0.0 or math.log2(ts.dim_count + 1) >= n * (s - eps) + math.log2(ts.mass) - 1e-9
            if not (upper_ok and lower_ok):
                raise InvariantError(f"typical-subspace dimension window violated at n={n}, eps={eps}")
        return row

    items = [(n, eps) for n in config.n_list for eps in config.epsilon_list]
    return _map_rows(one, items, config.workers)


def _eigen_fbar(scheme: CompressionScheme, spectrum) -> float:
    overlaps = pure_roundtrip_overlaps(scheme, spectrum.vectors)
    return float(np.clip((spectrum.values * overlaps).sum(), 0.0, 1.0))


def run_compress(config: ExperimentConfig) -> list[ReportRow]:
    """Rate-achievability sweep with a decreasing level schedule eps_n = max(eps_min, c/sqrt(n))."""
    source = config.build_source()
    s = entropy_rate_exact(source)

    def one(n: int) -> ReportRow:
        eps_n = max(config.compress_eps_min, config.compress_c / math.sqrt(n))
        try:
            rho = block_state(source, n, dense_cap=config.dense_cap)
        except ValueError as exc:
            return _skip_row("compress", n, exc, epsilon=eps_n, entropy_rate=s)
        scheme = make_scheme(source, n, epsilon=eps_n, dense_cap=config.dense_cap)
        spectrum = density_spectrum(rho)
        fe = roundtrip_entanglement_fidelity(scheme, rho)
        guaranteed = scheme.subspace_mass ** 2
        if fe < guaranteed - 1e-9:
            raise InvariantError(
                f"F_e={fe!r} below its projection bound {guaranteed!r} at n={n}"
            )
        fbar = _eigen_fbar(scheme, spectrum)
        f_out = fidelity(rho, scheme.roundtrip(rho))
        row = ReportRow(
            experiment="compress", n=n, epsilon=eps_n, entropy_rate=s,
            rate=scheme.rate_log2dim / n, rate_qubits=scheme.rate_qubits / n,
            typical_mass=scheme.subspace_mass,
            fe=fe, fe_lower_bound=(1.0 - eps_n) ** 2, fbar_eigen=fbar, f_out=f_out,
        )
        _check_chain(row)
        return row

    return _map_rows(one, [(n,) for n in config.n_list], config.workers)


def run_subrate(config: ExperimentConfig) -> list[ReportRow]:
    """Sub-entropy-rate sweep: the 6 * Ky-Fan bound and, when dense-feasible,
    measured fidelities of the rate-mode scheme."""
    source = config.build_source()
    s = entropy_rate_exact(source)

    def one(n: int, rate: float) -> ReportRow:
        status, reason = "ok", None
        if rate >= s:
            status, reason = "warning", "rate_not_below_entropy"
        dim_n = pow2_floor(n * rate)
        if dim_n < 1:
            return ReportRow(experiment="subrate", n=n, rate_target=rate, entropy_rate=s,
                             status="skipped", reason="compressed_dim_below_one")
        try:
            spec = class_spectrum(source, n, word_cap_bits=config.word_cap_bits)
        except ValueError as exc:
            return _skip_row("subrate", n, exc, rate_target=rate, entropy_rate=s)
        dim_n = min(dim_n, spec.total_dim)
        six = 6.0 * ky_fan_mass(spec, dim_n)
        row = ReportRow(experiment="subrate", n=n, rate_target=rate, entropy_rate=s,
                        rate=math.log2(dim_n) / n, six_ky_fan=six,
                        status=status, reason=reason)
        if source.site_dim ** n <= config.dense_cap:
            scheme = make_scheme(source, n, target_rate=rate, dense_cap=config.dense_cap)
            rho = block_state(source, n, dense_cap=config.dense_cap)
            spectrum = density_spectrum(rho)
            row.fe = roundtrip_entanglement_fidelity(scheme, rho)
            row.fbar_eigen = _eigen_fbar(scheme, spectrum)
            row.f_out = fidelity(rho, scheme.roundtrip(rho))
            row.fs_lower = row.fbar_eigen
            row.fs_upper = min(six, row.f_out)
            _check_chain(row)
        return row

    items = [(n, r) for n in config.n_list for r in config.target_rates]
    return _map_rows(one, items, config.workers)


# ---------------------------------------------------------------------------
# report writers
# ---------------------------------------------------------------------------

def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def rows_to_csv(rows: list[ReportRow]) -> str:
    lines = [f"# schema={REPORT_SCHEMA}", ",".join(COLUMNS)]
    for row in rows:
        data = row.as_dict()
        lines.append(",".join(_format_cell(data[c]) for c in COLUMNS))
    return "\n".join(lines) + "\n"


def rows_to_json(rows: list[ReportRow]) -> str:
    payload = {"schema": REPORT_SCHEMA, "columns": list(COLUMNS),
               "rows": [row.as_dict() for row in rows]}
    return json.dumps(payload, indent=2, default=float) + "\n"


def write_report(rows: list[ReportRow], out_dir: str | Path, name: str,
                 fmt: str = "csv") -> list[Path]:
    """Write the report; CSV reports always get a JSON mirror."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "csv":
        csv_path = out / f"{name}.csv"
        csv_path.write_text(rows_to_csv(rows))
        written.append(csv_path)
    json_path = out / f"{name}.json"
    json_path.write_text(rows_to_json(rows))
    written.append(json_path)
    return written


def write_series(rows: list[ReportRow], out_dir: str | Path, name: str,
                 x: str, y: str, group_by: str | None = None) -> list[Path]:
    """Plain two-column series files for plotting, one per group value."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    groups: dict = {}
    for row in rows:
        data = row.as_dict()
        if data.get(y) is None or row.status == "skipped":
            continue
        key = data.get(group_by) if group_by else None
        groups.setdefault(key, []).append((data[x], data[y]))
    written = []
    for key, pairs in groups.items():
        suffix = "" if key is None else f"_{group_by}{_format_cell(key)}"
        path = out / f"{name}{suffix}.tsv"
        lines = [f"# {x}\t{y}"]
        lines += [f"{_format_cell(a)}\t{_format_cell(b)}" for a, b in pairs]
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written
