"""Configuration-driven sweeps over dyadic center sets and report emission.

Three drivers share one :class:`ExperimentConfig`:

* :func:`run_stability_sweep`: sigma0 search, inverse-norm bound and the
  empirical stability ratio per level;
* :func:`run_bernstein_experiment`: stability, band-limited and remainder
  ratios combined into the Bernstein ratio per level;
* :func:`run_inverse_experiment`: near-best approximation on nested grids
  and the decay of consecutive differences in ``||.||_{k,p}``.

Every driver returns an :class:`ExperimentResult` whose ``ok`` flag collects
the quantitative contracts; the CLI turns a failed contract into a nonzero
exit status.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from . import __version__
from . import network as nw
from .bandlimit import bandlimit_report
from .geometry import Box, PointSet, gen_quasi_uniform, geometry_report, separation_radius
from .hankel import loglog_slope
from .kernels import make_kernel
from .rbf import sobolev_spline
from .stability import find_sigma0, inverse_norm_check, sample_family, stability_ratio_estimate

STABILITY_COLUMNS = ("level", "q", "sigma0", "dominance_ratio", "inv_norm_actual", "ratio_estimate")
BERNSTEIN_COLUMNS = ("level", "q", "sigma1", "bl_ratio", "approx_ratio", "bernstein_ratio")
INVERSE_COLUMNS = ("n", "h_n", "q_n", "rho_n", "approx_error", "diff_norm")

SLOPE_SLACK = 0.3
BERNSTEIN_SPREAD = 2.5
INVERSE_SLACK = 0.4
IN_SPACE_RESIDUAL = 1e-8
MONOTONE_TOL = 1e-8


def _parse_p(value) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "oo"):
        return math.inf
    return float(value)


def _parse_glue(value) -> tuple[float, float]:
    if isinstance(value, str):
        parts = [float(v) for v in value.replace(":", ",").split(",")]
    else:
        parts = [float(v) for v in value]
    if len(parts) != 2:
        raise ValueError("glue needs two endpoints")
    return parts[0], parts[1]


def _fmt_p(p: float) -> str:
    return "inf" if math.isinf(p) else repr(p)


@dataclass(frozen=True)
class ExperimentConfig:
    dim: int = 1
    beta: float = 3.0
    k: float = 1.0
    p: float = 2.0
    levels: int = 4
    trials: int = 16
    seed: int = 7
    extent: float = 2.0
    q0: float = 0.125
    tol_profile: str = "strict"
    grid_divisor: float | None = None
    pad_tol: float | None = None
    kernel1_glue: tuple[float, float] = (1.0, 3.0)
    kernel2_glue: tuple[float, float] = (0.5, 1.0)
    target: str = "sobolev"
    target_beta: float = 5.0
    rate_l: float = 2.0
    inverse_extent: float = 32.0
    rho_max: float = 1.0
    out: str = ""
    format: str = "csv"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.beta > self.dim:
            raise ValueError("beta must exceed the dimension")
        if not (0 <= self.k < self.beta - self.dim):
            raise ValueError(f"k = {self.k} violates 0 <= k < beta - d = {self.beta - self.dim}")
        if not (1.0 <= self.p <= math.inf):
            raise ValueError("p must lie in [1, inf]")
        if self.levels < 3:
            raise ValueError("levels must be >= 3 for a rate fit")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.extent <= 0 or self.q0 <= 0 or self.inverse_extent <= 0:
            raise ValueError("extents and q0 must be positive")
        if self.tol_profile not in nw.TOL_PROFILES:
            raise ValueError(f"tol_profile must be one of {sorted(nw.TOL_PROFILES)}")
        if self.target not in ("sobolev", "gaussian", "in_space"):
            raise ValueError("target must be sobolev, gaussian or in_space")
        if self.target == "sobolev" and self.target_beta < self.beta:
            raise ValueError("target_beta must be >= beta")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")

    # -- construction ----------------------------------------------------

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for raw_key, value in data.items():
            key = raw_key.strip().replace("-", "_")
            if key not in names:
                raise ValueError(f"unknown config key {raw_key!r}")
            kwargs[key] = value
        return cls(**_coerce(kwargs))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_mapping(read_config(path))

    def updated(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **_coerce(changes))

    # -- derived objects -------------------------------------------------

    @property
    def rule(self) -> nw.GridRule:
        base = nw.TOL_PROFILES[self.tol_profile]
        return nw.GridRule(
            self.grid_divisor if self.grid_divisor is not None else base.divisor,
            self.pad_tol if self.pad_tol is not None else base.pad_tol,
        )

    @property
    def p_conj(self) -> float:
        return nw.NormSpec(self.k, self.p).p_conj

    def level_sets(self) -> list[PointSet]:
        box = Box.cube(0.0, self.extent, self.dim)
        return [gen_quasi_uniform(box, 2.0 * self.q0 / 2 ** lev) for lev in range(self.levels)]

    def as_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["p"] = _fmt_p(self.p)
        out["kernel1_glue"] = list(self.kernel1_glue)
        out["kernel2_glue"] = list(self.kernel2_glue)
        return out


_INT_KEYS = {"dim", "levels", "trials", "seed"}
_FLOAT_KEYS = {"beta", "k", "extent", "q0", "target_beta", "rate_l", "inverse_extent", "rho_max"}
_OPT_FLOAT_KEYS = {"grid_divisor", "pad_tol"}


def _coerce(kwargs: dict[str, Any]) -> dict[str, Any]:
    out = {}
    for key, value in kwargs.items():
        if key in _INT_KEYS:
            out[key] = int(value)
        elif key in _FLOAT_KEYS:
            out[key] = float(value)
        elif key in _OPT_FLOAT_KEYS:
            out[key] = None if value in (None, "", "none") else float(value)
        elif key == "p":
            out[key] = _parse_p(value)
        elif key.endswith("_glue"):
            out[key] = _parse_glue(value)
        else:
            out[key] = str(value)
    return out


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    data = {}
    for num, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{num}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        data[key] = value
    return data


# ---------------------------------------------------------------------------
# results and emission


@dataclass
class ExperimentResult:
    kind: str
    columns: tuple[str, ...]
    rows: list[dict[str, Any]]
    summary: dict[str, Any] = field(default_factory=dict)
    contracts: dict[str, bool] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    payload: Any = None

    @property
    def ok(self) -> bool:
        return all(self.contracts.values())


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    return value


def render_report(result: ExperimentResult, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([_cell(row.get(c)) for c in result.columns])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "kind": result.kind,
            "version": __version__,
            "config": result.config,
            "columns": list(result.columns),
            "rows": [{c: row.get(c) for c in result.columns} for row in result.rows],
            "summary": result.summary,
            "contracts": result.contracts,
            "ok": result.ok,
        }
        return json.dumps(_jsonable(doc), indent=2) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(result: ExperimentResult, fmt: str = "csv", path=None) -> str:
    """Render ``result``; write it to ``path`` when given. Returns the text."""
    text = render_report(result, fmt)
    if path:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text


# ---------------------------------------------------------------------------
# drivers


def _candidate_density(ps: PointSet, q: float) -> int:
    # candidate nodes on a lattice 1/4 of the separation, so grid midpoints are hit
    longest = max(h - l for l, h in zip(ps.domain.lo, ps.domain.hi))
    return max(16, int(math.ceil(longest / (q / 2.0))))


def _stability_target(cfg: ExperimentConfig) -> float:
    return cfg.dim / cfg.p_conj - cfg.beta if not math.isinf(cfg.p_conj) else -cfg.beta


def run_stability_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    profile = sobolev_spline(cfg.beta, cfg.dim)
    k1 = make_kernel("K1", cfg.kernel1_glue)
    rows, contracts = [], {}
    qs, ratios, invs, m_hats = [], [], [], []
    for lev, ps in enumerate(cfg.level_sets()):
        try:
            search = find_sigma0(ps, profile, k1)
            inv = inverse_norm_check(search.matrix)
            est = stability_ratio_estimate(ps, profile, cfg.p, cfg.trials, cfg.seed + lev, cfg.rule)
        except Exception as exc:
            raise RuntimeError(f"level {lev}: {exc}") from exc
        rows.append({
            "level": lev, "q": search.q, "sigma0": search.sigma0,
            "dominance_ratio": search.matrix.dominance_ratio,
            "inv_norm_actual": inv.inv_norm_actual, "ratio_estimate": est.ratio,
        })
        contracts[f"level{lev}_dominance"] = search.matrix.dominance_ratio <= 0.5
        contracts[f"level{lev}_inverse_bound"] = inv.ok
        qs.append(search.q)
        ratios.append(est.ratio)
        invs.append(inv.inv_norm_actual)
        m_hats.append(search.m_hat)
    ratio_slope = loglog_slope(qs, ratios)
    inv_slope = loglog_slope(qs, invs)
    target = _stability_target(cfg)
    contracts["ratio_slope"] = ratio_slope >= target - SLOPE_SLACK
    contracts["inverse_slope"] = inv_slope >= cfg.dim - cfg.beta - SLOPE_SLACK
    summary = {
        "ratio_slope": ratio_slope, "ratio_target": target,
        "inv_norm_slope": inv_slope, "inv_norm_target": cfg.dim - cfg.beta,
        "m_hat": m_hats,
    }
    return ExperimentResult("stability", STABILITY_COLUMNS, rows, summary, contracts, cfg.as_dict())


def run_bernstein_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    profile = sobolev_spline(cfg.beta, cfg.dim)
    k1 = make_kernel("K1", cfg.kernel1_glue)
    k2 = make_kernel("K2", cfg.kernel2_glue)
    rows, contracts = [], {}
    qs, stab, appr, bern, rhos, m_hats = [], [], [], [], [], []
    for lev, ps in enumerate(cfg.level_sets()):
        try:
            geo = geometry_report(ps, _candidate_density(ps, separation_radius(ps)))
            search = find_sigma0(ps, profile, k1)
            fam = sample_family(ps, profile, cfg.trials, cfg.seed + lev, cfg.rule)
            est = stability_ratio_estimate(ps, profile, cfg.p, cfg.trials, cfg.seed + lev, family=fam)
            rep = bandlimit_report(fam, k2, cfg.k, cfg.p, cfg.dim)
        except Exception as exc:
            raise RuntimeError(f"level {lev}: {exc}") from exc
        rows.append({
            "level": lev, "q": geo.q, "sigma1": rep.sigma1, "bl_ratio": rep.bl_norm_ratio,
            "approx_ratio": rep.approx_ratio, "bernstein_ratio": rep.bernstein_ratio,
        })
        qs.append(geo.q)
        stab.append(est.ratio)
        appr.append(rep.approx_ratio)
        bern.append(rep.bernstein_ratio)
        rhos.append(geo.rho)
        m_hats.append(search.m_hat)
    spread = max(bern) / min(bern)
    approx_target = cfg.beta - cfg.k - (cfg.dim / cfg.p_conj if not math.isinf(cfg.p_conj) else 0.0)
    approx_slope = loglog_slope(qs, appr)
    stab_slope = loglog_slope(qs, stab)
    if cfg.k == 0:
        contracts["bernstein_k0_exact"] = all(b == 1.0 for b in bern)
    contracts["bernstein_spread"] = spread <= BERNSTEIN_SPREAD
    contracts["approx_slope"] = approx_slope >= approx_target - SLOPE_SLACK
    contracts["stability_slope"] = stab_slope >= _stability_target(cfg) - SLOPE_SLACK
    summary = {
        "bernstein_spread": spread, "approx_slope": approx_slope, "approx_target": approx_target,
        "stability_slope": stab_slope, "stability_target": _stability_target(cfg),
        "stability_ratio": stab, "rho": rhos, "m_hat": m_hats,
    }
    return ExperimentResult("bernstein", BERNSTEIN_COLUMNS, rows, summary, contracts, cfg.as_dict())


@dataclass(frozen=True)
class InverseLevel:
    n: int
    h: float
    q: float
    rho: float
    approx_error: float
    diff_norm: float | None


@dataclass(frozen=True)
class InverseRunReport:
    levels: tuple[InverseLevel, ...]
    exponent: float | None
    nested: bool
    target: str

    def rows(self) -> list[dict[str, Any]]:
        return [
            {"n": lv.n, "h_n": lv.h, "q_n": lv.q, "rho_n": lv.rho,
             "approx_error": lv.approx_error, "diff_norm": lv.diff_norm}
            for lv in self.levels
        ]


def nested_sets(cfg: ExperimentConfig) -> list[PointSet]:
    """``X_n``: grids of spacing ``2^{-n-1}`` on the centered cube of side ``inverse_extent``."""
    half = cfg.inverse_extent / 2.0
    box = Box.cube(-half, half, cfg.dim)
    return [gen_quasi_uniform(box, 2.0 ** (-n - 1)) for n in range(cfg.levels)]


def _target_values(cfg: ExperimentConfig, x: np.ndarray, first: PointSet) -> np.ndarray:
    r = np.linalg.norm(x, axis=1)
    if cfg.target == "sobolev":
        return sobolev_spline(cfg.target_beta, cfg.dim)(r)
    if cfg.target == "gaussian":
        return np.exp(-r * r / 2.0)
    coeffs = np.random.default_rng(cfg.seed).standard_normal(len(first))
    return sobolev_spline(cfg.beta, cfg.dim)(cdist(x, first.points)) @ coeffs


def regularized_lstsq(design: np.ndarray, rhs: np.ndarray, rel_reg: float = 1e-10) -> np.ndarray:
    """``argmin ||B a - y||^2 + eps ||a||^2`` with ``eps = rel_reg * max diag(B^T B)``."""
    eps = rel_reg * float(np.max(np.sum(design * design, axis=0)))
    n = design.shape[1]
    stacked = np.vstack([design, math.sqrt(eps) * np.eye(n)])
    sol, *_ = linalg.lstsq(stacked, np.concatenate([rhs, np.zeros(n)]), lapack_driver="gelsd")
    if not np.all(np.isfinite(sol)):
        raise RuntimeError("least-squares solve produced non-finite coefficients")
    return sol


def run_inverse_experiment(cfg: ExperimentConfig, target: str | None = None) -> ExperimentResult:
    """Near-best approximants ``f_n`` from nested spaces and the decay of
    ``||f_{n+1} - f_n||_{k,p}``, fitted as ``2^{-exponent n}``."""
    if target is not None:
        cfg = cfg.updated(target=target)
    profile = sobolev_spline(cfg.beta, cfg.dim)
    sets = nested_sets(cfg)
    nested = all(sets[n + 1].contains_set(sets[n]) for n in range(len(sets) - 1))
    q_fine = separation_radius(sets[-1])
    spacing = cfg.rule.spacing(q_fine)
    layout = nw.grid_layout(sets[0].domain, spacing, nw.decay_radius(profile, cfg.rule.pad_tol))
    x = layout.nodes()
    inside = sets[0].domain.contains(x)
    y = _target_values(cfg, x[inside], sets[0])

    f_norm = _flat_lp(y, spacing, cfg.p, cfg.dim)
    fits, errors, geos = [], [], []
    for n, ps in enumerate(sets):
        geo = geometry_report(ps, _candidate_density(ps, separation_radius(ps)))
        design = nw.design_matrix(layout, ps, profile)
        try:
            coeffs = regularized_lstsq(design[inside], y)
        except (linalg.LinAlgError, RuntimeError) as exc:
            raise RuntimeError(f"level {n}: least-squares failure: {exc}") from exc
        vals = design @ coeffs
        fits.append(vals.reshape(layout.shape))
        errors.append(_flat_lp(vals[inside] - y, spacing, cfg.p, cfg.dim))
        geos.append(geo)

    spec = nw.NormSpec(cfg.k, cfg.p)
    diffs = []
    for n in range(len(sets) - 1):
        dv = fits[n + 1] - fits[n]
        diffs.append(float(nw.lp_norm(nw.bessel_potential(dv, spacing, spec.k), spacing, spec.p)))

    levels = []
    for n, geo in enumerate(geos):
        levels.append(InverseLevel(n, geo.h, geo.q, geo.rho, float(errors[n]),
                                   diffs[n] if n < len(diffs) else None))
    contracts = {"nested": nested}
    for lv in levels:
        contracts[f"level{lv.n}_geometry"] = lv.h < 2.0 ** (-lv.n) and lv.q < 2.0 ** (-lv.n) and lv.rho <= cfg.rho_max + 1e-12
    exponent = None
    if cfg.target == "in_space":
        # relative to ||f||_p; the Tikhonov term biases in-span fits at level n >= 1
        contracts["in_space_residual"] = max(errors) / f_norm < IN_SPACE_RESIDUAL
    else:
        d = np.array(diffs)
        if np.all(d > 0):
            exponent = float(-np.polyfit(np.arange(len(d)), np.log(d), 1)[0] / math.log(2.0))
        contracts["decay_exponent"] = exponent is not None and exponent >= cfg.rate_l - cfg.k - INVERSE_SLACK
        contracts["monotone_error"] = all(errors[n + 1] <= errors[n] + MONOTONE_TOL for n in range(len(errors) - 1))
    report = InverseRunReport(tuple(levels), exponent, nested, cfg.target)
    summary = {"exponent": exponent, "target_exponent": cfg.rate_l - cfg.k, "nested": nested,
               "target": cfg.target, "relative_errors": [e / f_norm for e in errors]}
    return ExperimentResult("inverse", INVERSE_COLUMNS, report.rows(), summary, contracts, cfg.as_dict(), report)


def _flat_lp(values: np.ndarray, spacing: float, p: float, dim: int) -> float:
    # discrete L^p norm of values gathered from a d-dimensional grid
    v = np.abs(values)
    if math.isinf(p):
        return float(v.max())
    return float((spacing ** dim * np.sum(v ** p)) ** (1.0 / p))
