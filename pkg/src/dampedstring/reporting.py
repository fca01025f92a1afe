"""Run configuration, verification reports, and plot-data emission.

Reports serialize floats with ``repr`` (shortest round-trip), so identical
configuration and seed produce byte-identical output files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .coefficients import (CoefficientError, CoefficientSpec, Piece, constant,
                           parse_coefficient_spec, reduce_variable_speed)
from .discretization import BoundaryCondition

__all__ = [
    "ConfigError", "RunConfig", "CheckRecord", "VerificationReport",
    "parse_bc", "random_coefficients", "emit_plot_data",
]


class ConfigError(ValueError):
    """Invalid configuration file or flag combination."""


def parse_bc(text: str) -> BoundaryCondition:
    t = text.strip().lower()
    simple = {"min": BoundaryCondition.minimal,
              "zero0": BoundaryCondition.zero0,
              "zero1": BoundaryCondition.zero1,
              "max": BoundaryCondition.maximal}
    if t in simple:
        return simple[t]()
    if t.startswith("omega:"):
        try:
            re_s, im_s = t[len("omega:"):].split(",")
            return BoundaryCondition.quasi(complex(float(re_s), float(im_s)))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad omega in bc {text!r}: {exc}") from exc
    raise ConfigError(
        f"unknown bc {text!r}; expected min|zero0|zero1|max|omega:RE,IM")


@dataclass(frozen=True)
class RunConfig:
    n_grid: int = 64
    bc: BoundaryCondition = field(default_factory=BoundaryCondition.minimal)
    rho_text: str = "const 1"
    alpha_text: str = "const 1"
    speed_text: str | None = None
    zeta: float = 0.1
    n_max: int = 1
    seeds: tuple = (0, 1, 2, 3, 4)
    fit_window: tuple = (1 / 16, 1 / 8)
    out_dir: str = "."

    def __post_init__(self):
        if self.n_grid < 8:
            raise ConfigError("n_grid must be at least 8")
        if self.n_max < 0:
            raise ConfigError("n_max must be nonnegative")
        if not (0 < self.fit_window[0] < self.fit_window[1] <= 1):
            raise ConfigError("fit window fractions must satisfy 0 < lo < hi <= 1")

    def coefficients(self) -> tuple[CoefficientSpec, CoefficientSpec]:
        """Parsed (rho, alpha); a speed profile triggers the reduction to c=1."""
        try:
            rho = parse_coefficient_spec(self.rho_text, kind="density")
            alpha = parse_coefficient_spec(self.alpha_text, kind="damping")
        except CoefficientError as exc:
            raise ConfigError(str(exc)) from exc
        if self.speed_text is not None:
            c = parse_coefficient_spec(self.speed_text, kind="density")
            rho, alpha = reduce_variable_speed(rho, alpha, c)
        return rho, alpha

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        kw = {}
        scalar_keys = {"n_grid": int, "zeta": float, "n_max": int,
                       "rho": str, "alpha": str, "speed": str, "out": str}
        rename = {"rho": "rho_text", "alpha": "alpha_text",
                  "speed": "speed_text", "out": "out_dir"}
        for key, value in raw.items():
            if key == "bc":
                kw["bc"] = parse_bc(value)
            elif key == "seeds":
                kw["seeds"] = tuple(int(s) for s in value)
            elif key == "fit_window":
                kw["fit_window"] = tuple(float(v) for v in value)
            elif key in scalar_keys:
                kw[rename.get(key, key)] = scalar_keys[key](value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        return cls(**kw)

    def override(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def fingerprint(self) -> str:
        blob = json.dumps({
            "n_grid": self.n_grid, "bc": str(self.bc),
            "rho": self.rho_text, "alpha": self.alpha_text,
            "speed": self.speed_text, "zeta": repr(self.zeta),
            "n_max": self.n_max, "seeds": list(self.seeds),
            "fit_window": [repr(v) for v in self.fit_window],
        }, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class CheckRecord:
    name: str
    anchor: str
    status: str                # pass | fail | report-only
    measured: float
    tolerance: float | None

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "paper_anchor": self.anchor,
            "status": self.status,
            "measured": repr(float(self.measured)),
            "tolerance": None if self.tolerance is None else repr(float(self.tolerance)),
        }


@dataclass
class VerificationReport:
    config: RunConfig
    records: list = field(default_factory=list)

    def add(self, name: str, anchor: str, measured: float,
            tolerance: float | None, hard: bool = True) -> CheckRecord:
        if tolerance is None or not hard:
            status = "report-only"
        else:
            status = "pass" if measured <= tolerance else "fail"
        rec = CheckRecord(name, anchor, status, float(measured), tolerance)
        self.records.append(rec)
        return rec

    @property
    def passed(self) -> bool:
        return all(r.status != "fail" for r in self.records)

    def to_json(self, indent: int = 2) -> str:
        return json.dumps({
            "environment": {
                "n_grid": self.config.n_grid,
                "bc": str(self.config.bc),
                "config_hash": self.config.fingerprint(),
            },
            "passed": self.passed,
            "records": [r.as_dict() for r in self.records],
        }, indent=indent)

    def summary_lines(self):
        for r in self.records:
            tol = "-" if r.tolerance is None else f"{r.tolerance:.3e}"
            yield (f"[{r.status.upper():>11}] {r.name}: "
                   f"measured {r.measured:.6e} (tol {tol})")


def random_coefficients(seed: int, max_pieces: int = 3,
                        max_degree: int = 3) -> tuple[CoefficientSpec,
                                                      CoefficientSpec]:
    """Seeded draw of (rho, alpha): piecewise polynomials, rho in [0.5, 2],
    alpha in [-1, 1], degree <= 3."""
    rng = np.random.default_rng(seed)

    def draw(lo: float, hi: float, kind: str) -> CoefficientSpec:
        k = int(rng.integers(1, max_pieces + 1))
        cuts = np.concatenate([[0.0], np.sort(rng.uniform(0.1, 0.9, k - 1)),
                               [1.0]])
        pieces = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            deg = int(rng.integers(0, max_degree + 1))
            # anchor the constant term inside the range, keep the variation
            # small enough that the whole piece stays within [lo, hi]
            c0 = rng.uniform(lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo))
            rest = rng.uniform(-1, 1, deg) * (0.2 * (hi - lo) / max(deg, 1))
            pieces.append(Piece(float(a), float(b),
                                (float(c0), *map(float, rest))))
        return CoefficientSpec(tuple(pieces), kind)

    return draw(0.5, 2.0, "density"), draw(-1.0, 1.0, "damping")


def emit_plot_data(out_dir: str | Path, *, spectrum=None, convergence=None,
                   slope_fit=None) -> list:
    """Write gnuplot-friendly CSV files; returns the paths written.

    ``spectrum`` is a Spectrum (eigenvalue scatter), ``convergence`` a list of
    (n_grid, err_t0, err_eig1) rows, ``slope_fit`` a dict with keys j,
    re_lambda, fit_value (equal-length sequences).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if spectrum is not None:
        p = out / "eigenvalue_scatter.csv"
        lines = ["re,im,branch"]
        for lam in spectrum.eigenvalues:
            if abs(lam) < spectrum.tol_zero:
                br = "zero"
            elif lam.real > spectrum.tol_zero:
                br = "plus"
            elif lam.real < -spectrum.tol_zero:
                br = "minus"
            else:
                br = "overdamped"
            lines.append(f"{lam.real!r},{lam.imag!r},{br}")
        p.write_text("\n".join(lines) + "\n")
        written.append(p)
    if convergence is not None:
        p = out / "convergence.csv"
        lines = ["n_grid,err_t0,err_eig1"]
        for n, e0, e1 in convergence:
            lines.append(f"{n},{e0!r},{e1!r}")
        p.write_text("\n".join(lines) + "\n")
        written.append(p)
    if slope_fit is not None:
        p = out / "slope_fit.csv"
        lines = ["j,re_lambda,fit_value"]
        for j, re_l, fv in zip(slope_fit["j"], slope_fit["re_lambda"],
                               slope_fit["fit_value"]):
            lines.append(f"{j},{re_l!r},{fv!r}")
        p.write_text("\n".join(lines) + "\n")
        written.append(p)
    return written
