"""Well-conditioning diagnostics.

The problem with direction coefficient ``a`` is well-conditioned when
``zeta^+/Delta_PDE`` (upper half-plane) and ``zeta^-/Delta_PDE`` (lower
half-plane) tend to zero in the sectors where ``Re(a rho^n) < 0``, away
from the zeros.  We sample the log of these ratios along rays, at radii
that keep clear of the zero moduli, and fit the exponential growth rate.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .charmat import CharContext, pde_char_det, zeta_both, zeta_j
from .datum import Datum
from .errors import NoAdmissibleRadii

GROWTH_THRESHOLD = 0.02


@dataclass(frozen=True)
class Sector:
    lo: float
    hi: float

    @property
    def halfplane(self) -> str:
        return "upper" if 0.5 * (self.lo + self.hi) < np.pi else "lower"

    def contains(self, theta: float) -> bool:
        t = np.mod(theta, 2 * np.pi)
        return self.lo < t < self.hi

    def interior_angles(self, count: int = 5) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * np.arange(1, count + 1) / (count + 1)


@dataclass(frozen=True)
class SectorSet:
    n: int
    a: complex
    sectors: tuple

    def upper(self):
        return [s for s in self.sectors if s.halfplane == "upper"]

    def lower(self):
        return [s for s in self.sectors if s.halfplane == "lower"]


def decay_sectors(n: int, a: complex) -> SectorSet:
    """The n open sectors (angles in [0, 2 pi)) on which ``Re(a rho^n) > 0``."""
    a = complex(a)
    if abs(abs(a) - 1) > 1e-14 or abs(a.real) > 1e-14:
        raise ValueError("direction coefficient must be +i or -i")
    first = 1 if a.imag > 0 else 0  # a = i: sin(n theta) < 0
    secs = tuple(Sector((2 * m + first) * np.pi / n, (2 * m + first + 1) * np.pi / n) for m in range(n))
    return SectorSet(n, a, secs)


def exterior_sectors(n: int, a: complex) -> SectorSet:
    """Sectors exterior to the contours for direction ``a`` (where ``Re(a rho^n) < 0``)."""
    return decay_sectors(n, -a)


@dataclass
class RayDiagnostic:
    theta: float
    which: str
    radii: list
    log_ratio: list
    growth: float
    log_coeff: float
    verdict: str  # "decay" | "bounded" | "blowup"

    def to_dict(self):
        return asdict(self)


def admissible_radii(R_lo: float, R_hi: float, samples: int, zero_moduli: np.ndarray, delta: float) -> np.ndarray:
    """Up to ``samples`` increasing radii in ``[R_lo, R_hi]`` farther than ``delta`` from every zero modulus."""
    grid = np.linspace(R_lo, R_hi, 8 * samples)
    if zero_moduli.size:
        dist = np.min(np.abs(grid[:, None] - zero_moduli[None, :]), axis=1)
        grid = grid[dist > delta]
    if grid.size < min(samples, 20):
        raise NoAdmissibleRadii(f"only {grid.size} radii in [{R_lo}, {R_hi}] avoid the zeros by {delta}")
    idx = np.unique(np.round(np.linspace(0, grid.size - 1, samples)).astype(int))
    return grid[idx]


def _ratio_log(ctx, which, f, rho):
    d = pde_char_det(ctx, rho)
    if which in ("+", "zeta+"):
        num = zeta_both(ctx, rho, f)[0]
    elif which in ("-", "zeta-"):
        num = zeta_both(ctx, rho, f)[1]
    else:
        j = int(str(which).replace("zeta", "").lstrip("_"))
        num = zeta_j(ctx, j, rho, f)
    return num.log_abs() - d.log_abs()


def fit_growth(R: np.ndarray, y: np.ndarray):
    """Least-squares ``y = g R + c log R + c0``; returns (g, c)."""
    M = np.column_stack([R, np.log(R), np.ones_like(R)])
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    return float(coef[0]), float(coef[1])


def ray_diagnostic(ctx: CharContext, which: str, f: Datum, theta: float, R_range=(10.0, 80.0), catalogue=None,
                   samples: int = 80, delta: Optional[float] = None) -> RayDiagnostic:
    """Sample ``log|zeta/Delta_PDE|`` along ``rho = R exp(i theta)`` and classify its growth.

    The fit uses the upper half of the radius range so pre-asymptotic
    transients do not decide the verdict.  ``blowup`` iff the exponential
    rate exceeds 0.02; ``decay`` iff it is below -0.02, or it is within the
    band and the algebraic exponent is negative; otherwise ``bounded``.
    """
    if not 20 <= samples <= 400:
        raise ValueError("samples must lie in [20, 400]")
    zmods = np.abs(catalogue.sigmas) if catalogue is not None else np.array([])
    if delta is None:
        delta = catalogue.epsilon if catalogue is not None and np.isfinite(catalogue.epsilon) else 0.5
        delta = min(delta, 0.5)
    R = admissible_radii(R_range[0], R_range[1], samples, zmods, delta)
    y = _ratio_log(ctx, which, f, R * np.exp(1j * theta))
    upper = R >= 0.5 * (R[0] + R[-1])
    g, c = fit_growth(R[upper], y[upper])
    if g > GROWTH_THRESHOLD:
        verdict = "blowup"
    elif g < -GROWTH_THRESHOLD or c < -0.5:
        verdict = "decay"
    else:
        verdict = "bounded"
    return RayDiagnostic(float(theta), str(which), [float(r) for r in R], [float(v) for v in y], g, c, verdict)


@dataclass
class ConditioningReport:
    verdict: str  # "wellConditioned" | "illConditioned"
    a: complex
    evidence: List[RayDiagnostic] = field(default_factory=list)

    def to_json(self) -> str:
        obj = {
            "verdict": self.verdict,
            "direction": "+i" if self.a.imag > 0 else "-i",
            "evidence": [
                {
                    "theta": "%.17g" % e.theta,
                    "which": e.which,
                    "growth": "%.17g" % e.growth,
                    "log_coeff": "%.17g" % e.log_coeff,
                    "verdict": e.verdict,
                    "radii": ["%.17g" % r for r in e.radii],
                    "log_ratio": ["%.17g" % v for v in e.log_ratio],
                }
                for e in self.evidence
            ],
        }
        return json.dumps(obj, indent=2, sort_keys=True)


def default_basket() -> list:
    """Three polynomial probes used when the caller supplies no datum."""
    return [Datum.polynomial([1.0]), Datum.polynomial([0.0, 1.0]), Datum.polynomial([0.0, 0.0, 1.0])]


def classify_conditioning(ctx: CharContext, a: complex, f, catalogue=None, R_range=(10.0, 80.0),
                          samples: int = 60, angles_per_sector: int = 5) -> ConditioningReport:
    """Well-conditioning verdict for direction ``a`` and datum (or list of data) ``f``.

    Five interior rays per exterior sector are examined; zeta^+ is used in
    the upper half-plane and zeta^- in the lower. Any blow-up makes the
    problem ill-conditioned.
    """
    data = f if isinstance(f, (list, tuple)) else [f]
    if catalogue is None:
        from .spectrum import locate_zeros

        catalogue = locate_zeros(ctx, R_range[1] + 2.0)
    evidence = []
    for sec in exterior_sectors(ctx.n, a).sectors:
        which = "zeta+" if sec.halfplane == "upper" else "zeta-"
        for th in sec.interior_angles(angles_per_sector):
            for g in data:
                evidence.append(ray_diagnostic(ctx, which, g, th, R_range, catalogue, samples))
    bad = any(e.verdict == "blowup" for e in evidence)
    return ConditioningReport("illConditioned" if bad else "wellConditioned", complex(a), evidence)


# pseudoperiodic blow-up construction ------------------------------------------
@dataclass
class BlowupRow:
    k: int
    R: float
    delta_formula: complex
    delta_pde: complex
    eta2: complex
    ratio: complex
    predicted: complex


def blowup_points(k):
    R = 4 * np.asarray(k, dtype=float) * np.pi / np.sqrt(3)
    return R, R * np.exp(1j * np.pi / 6)


def delta_bracket(beta: float, rho: complex) -> complex:
    """``i sqrt(3) R^3 [3b + 3 + (b - 2) sum e^{i w^j rho} + (1 - 2b) sum e^{-i w^j rho}]`` with ``R = |rho|``."""
    w = np.exp(2j * np.pi / 3) ** np.arange(3)
    R = abs(rho)
    br = 3 * beta + 3 + (beta - 2) * np.sum(np.exp(1j * w * rho)) + (1 - 2 * beta) * np.sum(np.exp(-1j * w * rho))
    return 1j * np.sqrt(3) * R**3 * br


def eta2_formula(qT: Datum, rho: complex) -> complex:
    """``i sqrt(3) w^2 R^2 sum_j w^{2j} hat q(w^j rho) (e^{i w^j rho} - e^{-i w^{j+1} rho} - e^{-i w^{j+2} rho} + 1)``."""
    om = np.exp(2j * np.pi / 3)
    R = abs(rho)
    tot = 0j
    for j in range(3):
        wj = om**j
        qh = complex(qT.half_transform(np.array(wj * rho)))
        tot += om ** (2 * j) * qh * (np.exp(1j * wj * rho) - np.exp(-1j * om ** (j + 1) * rho)
                                      - np.exp(-1j * om ** (j + 2) * rho) + 1)
    return 1j * np.sqrt(3) * om**2 * R**2 * tot


def pseudo_blowup_probe(ctx_beta: CharContext, beta: float, qT: Datum, k_range: Sequence[int]) -> list:
    """Evaluate the explicit pseudoperiodic formulas at ``rho_k = (4 k pi / sqrt 3) e^{i pi/6}``.

    Returns one row per k with the bracket form of Delta_PDE, our own
    Delta_PDE, eta_2, the measured ratio eta_2 / Delta and the predicted
    leading term ``(-1)^k (q(0) - 2 q(1)) e^{R/2} / (6 R^2)``.
    """
    q0, q1 = complex(qT(0.0)), complex(qT(1.0))
    rows = []
    for k in k_range:
        R, rho = blowup_points(k)
        dform = delta_bracket(beta, rho)
        dpde = complex(pde_char_det(ctx_beta, np.array(rho)).to_complex())
        eta = eta2_formula(qT, rho)
        pred = (-1) ** k * (q0 - 2 * q1) * np.exp(R / 2) / (6 * R**2)
        rows.append(BlowupRow(int(k), float(R), dform, dpde, eta, eta / dform, pred))
    return rows
