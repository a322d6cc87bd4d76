"""Synthetic regional panels with known ground truth.

Emissions follow the dynamic convergence model::

    s[t] = s[t-1] + alpha * s[t-1] + phi[t] * g[t] + exp(beta * y[t-1]) * eps[t]

with the increment re-centred across regions every year, so that the output
satisfies the same centring identities as a panel built from real levels.
Levels are reported around fixed base magnitudes (emissions 1e6 t, GDP 1e10);
only relative quantities matter downstream.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .distributions import AepParams, sample as aep_sample
from .errors import InvalidSpec
from .panel import RegionYearObservation

__all__ = [
    "ResidualLaw",
    "GdpProcess",
    "GeneratorSpec",
    "SyntheticPanel",
    "simulate",
    "generate_panel",
    "write_csv",
]

EMISSIONS_BASE = 1e6
GDP_BASE = 1e10


@dataclass(frozen=True)
class ResidualLaw:
    """Innovation law: ``kind`` is ``"laplace"``, ``"normal"`` or ``"aep"``.

    ``scale`` is the Laplace scale or Normal standard deviation; a zero scale
    gives noiseless innovations. ``aep`` needs ``params``.
    """

    kind: str = "laplace"
    scale: float = 0.05
    params: Optional[AepParams] = None

    def draw(self, rng, shape):
        if self.kind == "laplace":
            return rng.laplace(0.0, self.scale, size=shape)
        if self.kind == "normal":
            return rng.normal(0.0, self.scale, size=shape)
        if self.kind == "aep":
            n = int(np.prod(shape))
            seed = int(rng.integers(2**63 - 1))
            return aep_sample(self.params, n, seed=seed).reshape(shape)
        raise InvalidSpec(f"unknown residual law {self.kind!r}")


@dataclass(frozen=True)
class GdpProcess:
    """GDP dynamics.

    ``"iid"``: each region's log GDP receives independent Laplace shocks of
    scale ``shock_scale``; regions start at log offsets with standard deviation
    ``size_dispersion``.

    ``"subunits"``: region ``i`` aggregates ``k_i`` subunits (log-uniform on
    ``1..max_subunits``). Each subunit's log output gets the shock
    ``sqrt(rho) * u_region + sqrt(1 - rho) * u_own``; ``rho = 0`` makes
    subunits independent, ``rho = 1`` fully common within a region.
    """

    kind: str = "iid"
    shock_scale: float = 0.02
    size_dispersion: float = 1.0
    rho: float = 0.0
    max_subunits: int = 256


@dataclass(frozen=True)
class GeneratorSpec:
    n_regions: int = 242
    n_years: int = 33
    true_alpha: float = -0.004
    true_phi: Union[float, Sequence[float]] = 0.266
    true_beta: float = -0.085
    residual_law: ResidualLaw = field(default_factory=ResidualLaw)
    gdp_process: GdpProcess = field(default_factory=GdpProcess)
    initial_emission_dispersion: float = 1.0
    first_year: int = 1990
    common_trend: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_regions < 2:
            raise InvalidSpec("n_regions must be >= 2")
        if self.n_years < 3:
            raise InvalidSpec("n_years must be >= 3")
        law, gdp = self.residual_law, self.gdp_process
        if law.kind not in ("laplace", "normal", "aep"):
            raise InvalidSpec(f"unknown residual law {law.kind!r}")
        if law.kind == "aep" and law.params is None:
            raise InvalidSpec("aep residual law needs params")
        if law.kind != "aep" and not law.scale >= 0:
            raise InvalidSpec("residual scale must be >= 0")
        if gdp.kind not in ("iid", "subunits"):
            raise InvalidSpec(f"unknown gdp process {gdp.kind!r}")
        if not gdp.shock_scale >= 0 or not gdp.size_dispersion >= 0:
            raise InvalidSpec("gdp scales must be >= 0")
        if not 0.0 <= gdp.rho <= 1.0:
            raise InvalidSpec("rho must lie in [0, 1]")
        if gdp.max_subunits < 1:
            raise InvalidSpec("max_subunits must be >= 1")
        if self.initial_emission_dispersion < 0:
            raise InvalidSpec("initial dispersion must be >= 0")
        if np.ndim(self.true_phi) and len(self.true_phi) != self.n_years:
            raise InvalidSpec("a per-year phi schedule needs one value per year")

    @property
    def years(self):
        return np.arange(self.first_year, self.first_year + self.n_years)

    def phi_schedule(self):
        return np.broadcast_to(np.asarray(self.true_phi, dtype=float), (self.n_years,))


@dataclass(frozen=True)
class SyntheticPanel:
    spec: GeneratorSpec
    regions: tuple
    years: np.ndarray
    observations: list
    s: np.ndarray
    y: np.ndarray
    eps: np.ndarray  # innovations, regions x (years - 1)
    log_gdp: np.ndarray


def _simulate_log_gdp(spec, rng):
    n, T = spec.n_regions, spec.n_years
    proc = spec.gdp_process
    if proc.kind == "iid":
        log_gdp = np.empty((n, T))
        log_gdp[:, 0] = rng.normal(0.0, proc.size_dispersion, size=n)
        shocks = rng.laplace(0.0, proc.shock_scale, size=(n, T - 1))
        log_gdp[:, 1:] = log_gdp[:, [0]] + np.cumsum(shocks, axis=1)
        return log_gdp

    k = np.rint(np.exp(rng.uniform(0.0, np.log(proc.max_subunits), size=n))).astype(int)
    k = np.clip(k, 1, proc.max_subunits)
    owner = np.repeat(np.arange(n), k)
    starts = np.concatenate([[0], np.cumsum(k)[:-1]])
    common = rng.laplace(0.0, proc.shock_scale, size=(n, T - 1))
    own = rng.laplace(0.0, proc.shock_scale, size=(owner.size, T - 1))
    shocks = np.sqrt(proc.rho) * common[owner] + np.sqrt(1.0 - proc.rho) * own
    z = np.concatenate([np.zeros((owner.size, 1)), np.cumsum(shocks, axis=1)], axis=1)
    return np.log(np.add.reduceat(np.exp(z), starts, axis=0))


def simulate(spec: GeneratorSpec) -> SyntheticPanel:
    rng = np.random.default_rng(spec.seed)
    n, T = spec.n_regions, spec.n_years
    log_gdp = _simulate_log_gdp(spec, rng)
    y = log_gdp - log_gdp.mean(axis=0)
    g = np.diff(y, axis=1)

    eps = spec.residual_law.draw(rng, (n, T - 1))
    phi = spec.phi_schedule()
    s = np.empty((n, T))
    s0 = rng.normal(0.0, spec.initial_emission_dispersion, size=n)
    s[:, 0] = s0 - s0.mean()
    for t in range(1, T):
        inc = (
            spec.true_alpha * s[:, t - 1]
            + phi[t] * g[:, t - 1]
            + np.exp(spec.true_beta * y[:, t - 1]) * eps[:, t - 1]
        )
        s[:, t] = s[:, t - 1] + (inc - inc.mean())

    years = spec.years
    trend = spec.common_trend * np.arange(T)
    emissions = EMISSIONS_BASE * np.exp(s + trend)
    gdp = GDP_BASE * np.exp(log_gdp)
    width = len(str(n))
    regions = tuple(f"R{i:0{width}d}" for i in range(n))
    observations = [
        RegionYearObservation(regions[i], int(years[t]), float(emissions[i, t]), float(gdp[i, t]))
        for i in range(n)
        for t in range(T)
    ]
    return SyntheticPanel(spec, regions, years, observations, s, y, eps, log_gdp)


def generate_panel(spec: GeneratorSpec) -> list:
    return simulate(spec).observations


def write_csv(observations, emissions_path, gdp_path):
    """Write observations in the long CSV schema read by the command line."""
    for path, column in ((emissions_path, "emissions"), (gdp_path, "gdp")):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["region_id", "year", column])
            for obs in observations:
                w.writerow([obs.region_id, obs.year, repr(float(getattr(obs, column)))])
