"""Two-body decay kinematics seen by a pair of point detectors.

Natural units throughout (hbar = c = 1): masses, energies and momenta share
one unit, lengths carry inverse-energy units.  The incoming momentum ``p``
defines the z axis; the detector separation ``r = x1 - x2`` lies in the
x-z plane at angle ``alpha`` from ``p``.

A *branch* ``(i, j)`` assigns gap ``delta_i`` to particle 1 and ``delta_j``
to particle 2.  Both branches (1, 2) and (2, 1) contribute to the detector
signal; each is gated by ``delta_i > m`` and ``|cos theta_ij| <= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ClosedChannelError, DegenerateGeometryError, InfeasibleError

BRANCHES = ((1, 2), (2, 1))

# |cos theta| may exceed 1 by rounding at exact tangency of the momentum band
_GATE_SLACK = 1e-12


@dataclass(frozen=True)
class ProcessParams:
    """Decay side: outgoing mass ``m``, parent mass ``M``, parent momentum ``P``."""

    m: float
    M: float
    P: float

    def __post_init__(self):
        for name in ("m", "M", "P"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.m <= 0:
            raise ValueError(f"m must be positive, got {self.m}")
        if self.M < 0 or self.P < 0:
            raise ValueError("M and P must be non-negative")

    @property
    def omega_p(self) -> float:
        """Parent energy sqrt(M^2 + P^2)."""
        return math.hypot(self.M, self.P)


@dataclass(frozen=True)
class DetectorPair:
    """Two detectors with gaps ``delta1``, ``delta2`` at separation ``r``.

    ``alpha`` is the angle between the separation vector and the parent
    momentum.  The couplings only enter an overall factor that cancels on
    normalization; they are kept for completeness.  ``radius_a`` is the
    radius of a spherical detector, ``None`` for point-like detectors.
    """

    delta1: float
    delta2: float
    r: float
    alpha: float
    eps1: float = 1.0
    eps2: float = 1.0
    radius_a: float | None = None

    def __post_init__(self):
        for name in ("delta1", "delta2", "r", "alpha", "eps1", "eps2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.r < 0:
            raise ValueError(f"r must be non-negative, got {self.r}")
        if not 0.0 <= self.alpha <= math.pi:
            raise ValueError(f"alpha must lie in [0, pi], got {self.alpha}")
        if self.radius_a is not None and not (self.radius_a >= 0 and math.isfinite(self.radius_a)):
            raise ValueError(f"radius_a must be a non-negative number, got {self.radius_a!r}")

    def gap(self, index: int) -> float:
        return self.delta1 if index == 1 else self.delta2

    @property
    def coupling_prefactor(self) -> float:
        return self.eps1**2 * self.eps2**2 / 2

    def trig_alpha(self) -> tuple[float, float]:
        """``(cos alpha, sin alpha)``, exact at alpha in {0, pi/2, pi}."""
        cos_a = math.sin(math.pi / 2 - self.alpha)
        sin_a = math.sin(min(self.alpha, math.pi - self.alpha))
        return cos_a, sin_a

    def separation(self) -> np.ndarray:
        """Separation vector ``x1 - x2`` in the frame with p along z."""
        cos_a, sin_a = self.trig_alpha()
        return self.r * np.array([sin_a, 0.0, cos_a])


@dataclass(frozen=True)
class BranchKinematics:
    i: int
    j: int
    kappa_i: float
    kappa_j: float
    cos_theta: float
    sin_theta: float
    open: bool


@dataclass(frozen=True)
class Constraint:
    name: str
    passed: bool
    lhs: float
    rhs: float
    relation: str


@dataclass(frozen=True)
class ValidationReport:
    constraints: tuple[Constraint, ...] = field(default_factory=tuple)

    @property
    def feasible(self) -> bool:
        return all(c.passed for c in self.constraints)

    def failures(self) -> list[Constraint]:
        return [c for c in self.constraints if not c.passed]

    def __getitem__(self, name: str) -> Constraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "constraints": [
                {"name": c.name, "passed": c.passed, "lhs": c.lhs, "rhs": c.rhs, "relation": c.relation}
                for c in self.constraints
            ],
        }

    def format_table(self) -> str:
        lines = [f"{'constraint':<16} {'status':<6} {'lhs':>22}   {'rhs':>22}"]
        for c in self.constraints:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{c.name:<16} {status:<6} {c.lhs:>22.15g} {c.relation:^3}{c.rhs:>22.15g}")
        lines.append(f"feasible: {'yes' if self.feasible else 'no'}")
        return "\n".join(lines)


def kappa(delta: float, m: float) -> float:
    """On-shell momentum magnitude of a particle absorbed with energy ``delta``."""
    if delta < m:
        raise ClosedChannelError(f"gap {delta} below particle mass {m}: channel closed")
    return math.sqrt((delta - m) * (delta + m))


def cos_theta(P: float, kappa_i: float, kappa_j: float) -> float:
    """Polar cosine of k1 relative to p for the branch with magnitudes (kappa_i, kappa_j).

    The caller is responsible for gating on ``|result| <= 1``.
    """
    if P == 0 or kappa_i == 0:
        raise DegenerateGeometryError("cos theta undefined for P = 0 or kappa_i = 0")
    return (P * P + kappa_i * kappa_i - kappa_j * kappa_j) / (2 * P * kappa_i)


def branch_kinematics(proc: ProcessParams, det: DetectorPair, branch: tuple[int, int]) -> BranchKinematics:
    """On-shell quantities and Theta-gate status for one branch.

    Never raises: a closed branch is reported with ``open=False`` and NaN in
    the undefined fields.
    """
    i, j = branch
    d_i, d_j = det.gap(i), det.gap(j)
    nan = float("nan")
    if not (d_i > proc.m and d_j >= proc.m):
        k_i = kappa(d_i, proc.m) if d_i >= proc.m else nan
        k_j = kappa(d_j, proc.m) if d_j >= proc.m else nan
        return BranchKinematics(i, j, k_i, k_j, nan, nan, False)
    k_i, k_j = kappa(d_i, proc.m), kappa(d_j, proc.m)
    if proc.P == 0:
        return BranchKinematics(i, j, k_i, k_j, nan, nan, False)
    c = cos_theta(proc.P, k_i, k_j)
    if abs(c) > 1 + _GATE_SLACK:
        return BranchKinematics(i, j, k_i, k_j, c, nan, False)
    c = min(1.0, max(-1.0, c))
    return BranchKinematics(i, j, k_i, k_j, c, math.sqrt(max(0.0, 1 - c * c)), True)


def open_branches(proc: ProcessParams, det: DetectorPair) -> list[BranchKinematics]:
    return [b for b in (branch_kinematics(proc, det, br) for br in BRANCHES) if b.open]


def validate_params(proc: ProcessParams, det: DetectorPair, tol_abs: float | None = None) -> ValidationReport:
    """Check every kinematic constraint and report the evaluated sides.

    ``tol_abs`` is the absolute tolerance on energy closure
    ``P^2 + M^2 = (delta1 + delta2)^2``; default ``1e-9 (delta1 + delta2)^2``.
    The momentum band is symmetric under branch relabeling, so it is checked
    once.  ``P = 0`` is reported infeasible: the p axis is undefined.
    """
    m, M, P = proc.m, proc.M, proc.P
    d1, d2 = det.delta1, det.delta2
    total = (d1 + d2) ** 2
    if tol_abs is None:
        tol_abs = 1e-9 * total
    out = [
        Constraint("gap_1", d1 > m, d1, m, ">"),
        Constraint("gap_2", d2 > m, d2, m, ">"),
        Constraint("decay_threshold", M >= 2 * m, M, 2 * m, ">="),
    ]
    lhs = P * P + M * M
    out.append(Constraint("energy_closure", abs(lhs - total) <= tol_abs, lhs, total, "=="))

    if d1 >= m and d2 >= m:
        k1, k2 = kappa(d1, m), kappa(d2, m)
        slack = _GATE_SLACK * (k1 + k2)
        lo, hi = abs(k1 - k2), k1 + k2
        out.append(Constraint("band_lower", P > 0 and lo <= P + slack, lo, P, "<="))
        out.append(Constraint("band_upper", P > 0 and P <= hi + slack, P, hi, "<="))
    else:
        nan = float("nan")
        out.append(Constraint("band_lower", False, nan, P, "<="))
        out.append(Constraint("band_upper", False, P, nan, "<="))
    return ValidationReport(tuple(out))


def reconstruct_momenta(
    proc: ProcessParams, det: DetectorPair, branch: tuple[int, int], psi: float
) -> tuple[np.ndarray, np.ndarray]:
    """Outgoing 3-momenta for azimuth ``psi`` on the given branch (p along z)."""
    b = branch_kinematics(proc, det, branch)
    if not b.open:
        raise InfeasibleError(f"branch {branch} is closed", validate_params(proc, det))
    k1 = b.kappa_i * np.array([b.sin_theta * math.cos(psi), b.sin_theta * math.sin(psi), b.cos_theta])
    k2 = np.array([0.0, 0.0, proc.P]) - k1
    return k1, k2


@dataclass(frozen=True)
class ClassicalSolution:
    """One solution of the planar break-up; ``labeling`` says which gap each particle took."""

    k1: np.ndarray
    k2: np.ndarray
    labeling: tuple[int, int]


def solve_classical_2d(p, m: float, delta1: float, delta2: float) -> list[ClassicalSolution]:
    """All real solutions of the nonrelativistic planar break-up.

    Solves ``p = k1 + k2`` with ``|k1|^2 / 2m = delta_a`` and
    ``|k2|^2 / 2m = delta_b`` for both labelings ``(a, b)``.  Solutions are
    computed in the frame where p is the x axis, mirror pairs (y -> -y) both
    kept, and rotated back to the frame of the input ``p``.  For ``p = 0``
    and equal radii the continuum of back-to-back pairs is represented by
    the two x-axis pairs.  No real solution gives an empty list.
    """
    if m <= 0 or delta1 <= 0 or delta2 <= 0:
        raise ValueError("m and both gaps must be positive")
    p = np.asarray(p, dtype=float)
    P = math.hypot(p[0], p[1])
    radii = {1: math.sqrt(2 * m * delta1), 2: math.sqrt(2 * m * delta2)}

    solutions: list[ClassicalSolution] = []

    def add(k1, k2, labeling):
        for s in solutions:
            if s.labeling == labeling and np.allclose(s.k1, k1, rtol=0, atol=1e-14 * max(1.0, P)):
                return
        # equal gaps make the two labelings coincide
        for s in solutions:
            if delta1 == delta2 and np.allclose(s.k1, k1, rtol=0, atol=1e-14 * max(1.0, P)):
                return
        solutions.append(ClassicalSolution(k1, k2, labeling))

    for a, b in BRANCHES:
        r1, r2 = radii[a], radii[b]
        if P == 0:
            if r1 == r2:
                add(np.array([r1, 0.0]), np.array([-r1, 0.0]), (a, b))
                add(np.array([-r1, 0.0]), np.array([r1, 0.0]), (a, b))
            continue
        ux, uy = p[0] / P, p[1] / P
        x = (P * P + r1 * r1 - r2 * r2) / (2 * P)
        y2 = r1 * r1 - x * x
        if y2 < -1e-12 * r1 * r1:
            continue
        y = math.sqrt(max(y2, 0.0))
        for yy in ((y, -y) if y > 0 else (0.0,)):
            k1 = np.array([x * ux - yy * uy, x * uy + yy * ux])
            add(k1, p - k1, (a, b))
    return solutions
