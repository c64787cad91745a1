"""Run configuration: strict YAML parsing with aggregated validation errors."""
from __future__ import annotations

import difflib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .correlation import GhostSetup
from .diffraction import NSlit, build_kernel, read_mask
from .exceptions import GhostDiffError
from .modes import DetectorMap, build_grid, flat_spectrum, gaussian_spectrum
from .optics import make_beam_splitter

DEFAULT_COUNT = 4097
DEFAULT_N_SAMPLES = 1_000_000
DEFAULT_POINTS = 1025
DEFAULT_QUAD_POINTS = 2048


class ConfigError(GhostDiffError):
    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class GridConfig:
    k_max: float
    optical_wavelength: float
    count: int = DEFAULT_COUNT


@dataclass(frozen=True)
class SourceConfig:
    shape: str
    level: Optional[float] = None
    peak: Optional[float] = None
    sigma_k: Optional[float] = None


@dataclass(frozen=True)
class SplitterConfig:
    r: float


@dataclass(frozen=True)
class ApertureConfig:
    type: str
    plane_extent: float
    n: int = 1
    a: Optional[float] = None
    d: float = 0.0
    offset_x: float = 0.0
    mask_path: Optional[str] = None
    quad_points: int = DEFAULT_QUAD_POINTS


@dataclass(frozen=True)
class DetectorConfig:
    f3: float
    x_min: float
    x_max: float
    points: int = DEFAULT_POINTS
    k0: float = 0.0


@dataclass(frozen=True)
class OracleConfig:
    n_samples: int = DEFAULT_N_SAMPLES
    seed: int = 0
    enabled: bool = True
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig
    source: SourceConfig
    splitter: SplitterConfig
    aperture: ApertureConfig
    detector: DetectorConfig
    oracle: OracleConfig = field(default_factory=OracleConfig)
    base_dir: Path = Path(".")


# section -> key -> (kind, required)
_SCHEMA: Dict[str, Dict[str, Tuple[str, bool]]] = {
    "grid": {"k_max": ("float", True), "count": ("int", False),
             "optical_wavelength": ("float", True)},
    "source": {"shape": ("str", True), "level": ("float", False), "peak": ("float", False),
               "sigma_k": ("float", False)},
    "splitter": {"r": ("float", True)},
    "aperture": {"type": ("str", True), "n": ("int", False), "a": ("float", False),
                 "d": ("float", False), "offset_x": ("float", False),
                 "mask_path": ("str", False), "plane_extent": ("float", True),
                 "quad_points": ("int", False)},
    "detector": {"f3": ("float", True), "x_min": ("float", True), "x_max": ("float", True),
                 "points": ("int", False), "k0": ("float", False)},
    "oracle": {"n_samples": ("int", False), "seed": ("int", False), "enabled": ("bool", False),
               "workers": ("int", False)},
}


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads exponents without a sign (1e-6, 4.0e6) as floats."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                |[-+]?\.(?:inf|Inf|INF)
                |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)

_REQUIRED_SECTIONS = ("grid", "source", "splitter", "aperture", "detector")
_CLASSES = {"grid": GridConfig, "source": SourceConfig, "splitter": SplitterConfig,
            "aperture": ApertureConfig, "detector": DetectorConfig, "oracle": OracleConfig}


def _unknown(key: str, allowed, path: str) -> str:
    where = f"{path}.{key}" if path else key
    close = difflib.get_close_matches(key, list(allowed), n=1)
    hint = f" (did you mean '{close[0]}'?)" if close else ""
    return f"{where}: unknown key{hint}"


def _coerce(value: Any, kind: str):
    if kind == "bool":
        return value if isinstance(value, bool) else None
    if isinstance(value, bool):
        return None
    if kind == "int":
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        return None
    if kind == "float":
        if isinstance(value, (int, float)) and math.isfinite(value):
            return float(value)
        return None
    return value if isinstance(value, str) else None


def _load(text: str) -> dict:
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError([f"parse error{where}: {problem}"]) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(["top level must be a mapping of sections"])
    return doc


def parse_config(text: str, base_dir: Path | str = ".") -> RunConfig:
    """Parse and fully validate a YAML run configuration.

    Every problem is collected and reported at once as a :class:`ConfigError`.
    """
    doc = _load(text)
    problems: List[str] = []
    sections: Dict[str, dict] = {}
    for key in doc:
        if key not in _SCHEMA:
            problems.append(_unknown(str(key), _SCHEMA, ""))
    for name in _REQUIRED_SECTIONS:
        if name not in doc:
            problems.append(f"{name}: missing section")
    ok = set()
    for name, fields in _SCHEMA.items():
        before = len(problems)
        raw = doc.get(name, {})
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            problems.append(f"{name}: must be a mapping")
            continue
        values = {}
        for key, value in raw.items():
            if key not in fields:
                problems.append(_unknown(str(key), fields, name))
                continue
            kind = fields[key][0]
            v = _coerce(value, kind)
            if v is None:
                problems.append(f"{name}.{key}: expected {kind}, got {value!r}")
            else:
                values[key] = v
        if name in doc:
            for key, (_, required) in fields.items():
                if required and key not in raw:
                    problems.append(f"{name}.{key}: required")
        sections[name] = values
        if len(problems) == before and (name in doc or name == "oracle"):
            ok.add(name)

    _check_ranges(sections, ok, problems, Path(base_dir))
    if problems:
        raise ConfigError(problems)
    built = {name: _CLASSES[name](**vals) for name, vals in sections.items()}
    return RunConfig(**built, base_dir=Path(base_dir))


def _check_ranges(s: Dict[str, dict], ok: set, problems: List[str], base_dir: Path) -> None:
    """Range checks, run only on sections that parsed cleanly."""

    def need(cond, path, reason):
        if not cond:
            problems.append(f"{path}: {reason}")

    if "grid" in ok:
        _check_grid(s["grid"], need)
    if "source" in ok:
        _check_source(s["source"], problems, need)
    if "splitter" in ok:
        r = s["splitter"]["r"]
        need(0 < r < 1, "splitter.r", f"must lie strictly between 0 and 1, got {r}")
    if "aperture" in ok:
        _check_aperture(s["aperture"], problems, need, base_dir)
    if "detector" in ok:
        det = s["detector"]
        need(det["f3"] > 0, "detector.f3", "must be positive")
        need(det.get("points", DEFAULT_POINTS) >= 2, "detector.points", "must be >= 2")
        need(det["x_max"] > det["x_min"], "detector.x_max", "must exceed detector.x_min")
    if "oracle" in ok:
        orc = s["oracle"]
        need(orc.get("n_samples", DEFAULT_N_SAMPLES) >= 10_000, "oracle.n_samples",
             "must be >= 10000")
        need(orc.get("seed", 0) >= 0, "oracle.seed", "must be non-negative")
        need(orc.get("workers", 1) >= 1, "oracle.workers", "must be >= 1")


def _check_grid(g, need):
    count = g.get("count", DEFAULT_COUNT)
    need(count >= 3 and count % 2 == 1, "grid.count", "must be an odd integer >= 3")
    need(g["optical_wavelength"] > 0, "grid.optical_wavelength", "must be positive")
    need(g["k_max"] > 0, "grid.k_max", "must be positive")
    if g["optical_wavelength"] > 0:
        kt = 2 * math.pi / g["optical_wavelength"]
        need(g["k_max"] < kt, "grid.k_max", f"must be below 2*pi/optical_wavelength = {kt:.6g}")


def _check_source(src, problems, need):
    shape = src["shape"]
    expected = {"flat": {"level"}, "gaussian": {"peak", "sigma_k"}}
    if shape not in expected:
        problems.append(f"source.shape: must be 'flat' or 'gaussian', got {shape!r}")
    else:
        for key in sorted(expected[shape] - src.keys()):
            problems.append(f"source.{key}: required when shape is {shape}")
        for key in sorted(src.keys() - expected[shape] - {"shape"}):
            problems.append(f"source.{key}: not used when shape is {shape}")
        for key in expected[shape] & src.keys():
            need(src[key] > 0, f"source.{key}", "must be positive")


def _check_aperture(ap, problems, need, base_dir):
    need(ap["plane_extent"] > 0, "aperture.plane_extent", "must be positive")
    need(ap.get("quad_points", DEFAULT_QUAD_POINTS) >= 64, "aperture.quad_points", "must be >= 64")
    if ap["type"] == "nslit":
        n = ap.get("n", 1)
        need(n >= 1, "aperture.n", "must be >= 1")
        need("a" in ap, "aperture.a", "required for nslit")
        need("mask_path" not in ap, "aperture.mask_path", "not used for nslit")
        if "a" in ap:
            need(ap["a"] > 0, "aperture.a", "must be positive")
            if n > 1:
                need(ap.get("d", 0.0) > ap["a"], "aperture.d", "must exceed aperture.a when n > 1")
    elif ap["type"] == "mask":
        if "mask_path" not in ap:
            problems.append("aperture.mask_path: required for mask")
        elif not (base_dir / ap["mask_path"]).is_file():
            problems.append(f"aperture.mask_path: file not found: {ap['mask_path']}")
        for key in ("n", "a", "d", "offset_x"):
            need(key not in ap, f"aperture.{key}", "not used for mask")
    else:
        problems.append(f"aperture.type: must be 'nslit' or 'mask', got {ap['type']!r}")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from None
    return parse_config(text, base_dir=path.parent)


def build_setup(cfg: RunConfig) -> GhostSetup:
    grid = build_grid(cfg.grid.k_max, cfg.grid.count, cfg.grid.optical_wavelength)
    if cfg.source.shape == "flat":
        spectrum = flat_spectrum(grid, cfg.source.level)
    else:
        spectrum = gaussian_spectrum(grid, cfg.source.peak, cfg.source.sigma_k)
    ap = cfg.aperture
    if ap.type == "nslit":
        aperture = NSlit(ap.n, ap.a, ap.d, ap.offset_x)
    else:
        aperture = read_mask(cfg.base_dir / ap.mask_path)
    kernel = build_kernel(grid, aperture, ap.plane_extent, ap.quad_points)
    detector = DetectorMap(cfg.detector.f3, cfg.grid.optical_wavelength)
    return GhostSetup(spectrum, make_beam_splitter(cfg.splitter.r), kernel, detector,
                      cfg.detector.k0, aperture)
