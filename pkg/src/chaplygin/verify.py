"""Batch certification of the structural properties of the reduced brackets.

Each suite samples seeded random states, evaluates one claim, and returns
CheckResult records with the worst observed value against its tolerance:

  * Jacobi: the scaled table passes the Jacobi identity to 1e-9; the
    standard and affine tables are certified non-Jacobi (their per-state
    max Jacobiator exceeds a calibrated threshold on >= 99% of samples).
  * Casimirs: |gamma|^2 for every variant and K . gamma for the affine and
    scaled variants vanish against every coordinate function; the standard
    table generically fails the K . gamma test.
  * Non-integrability: trace(T) - gamma . T gamma > 0 everywhere, and the
    closed form agrees with a finite-difference two-form evaluation on the
    standard table's coordinate vector fields.
  * The one-form (K + m r^2 w) . dgamma + gamma . dK annihilates all six
    coordinate Hamiltonian fields of the standard table.
  * H and J are in involution for all variants, and the mu-scaled affine
    fields of H and J commute as flows (the unscaled ones do not).
  * The measure with density 1/mu is preserved; the unweighted field has
    generically nonzero divergence.
  * Lambda grad(H) reproduces (K x w, gamma x w) for the standard and
    affine tables.
  * The multiplier-form trajectory projects onto the reduced trajectory,
    with fourth-order defect decay under step refinement.

Checks with a "generically nonzero" conclusion use the fraction-above-
threshold criterion because isolated sample states can annihilate the
quantity; the thresholds were frozen from a finite-difference calibration
run at the canonical parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import brackets
from .brackets import (
    BracketTable,
    VARIANTS,
    bracket_eval,
    bracket_table,
    energy_field,
    gamma_square_field,
    jacobiator_tensor,
    momentum_square_field,
    vertical_momentum_field,
)
from .dynamics import (
    IntegrationError,
    MultiplierState,
    _reduced_rhs_z,
    divergence_unweighted,
    divergence_weighted,
    integrate_multiplier,
    integrate_reduced,
    multiplier_state_from_reduced,
    rk4_step,
)
from .model import ReducedState, SphereParams, _mu_raw, _omega_w3_raw, t_matrix
from .so3 import exp_rotation, poisson_vector

DEFAULT_TOLERANCES = {
    "tol_jacobi_scaled": 1e-9,
    "threshold_jacobi_standard": 1e-2,
    "threshold_jacobi_affine": 1e-3,
    "tol_casimir": 1e-12,
    "threshold_casimir_standard": 5e-3,
    "tol_alpha": 1e-12,
    "tol_involution": 1e-12,
    "tol_commute": 1e-6,
    "tol_measure": 1e-6,
    "threshold_measure_unweighted": 1e-3,
    "tol_bracket_dynamics": 1e-12,
    "tol_consistency": 1e-6,
    "min_consistency_order": 3.5,
    "tol_nonintegrability_oracle": 1e-6,
    "generic_fraction": 0.99,
}

# Canonical generic initial data shared by the slow checks.
DEFAULT_K0 = (1.0, 0.5, -0.8)
DEFAULT_ROTATION = (0.3, -0.2, 0.4)


@dataclass(frozen=True)
class SampleSpec:
    """Seeded sampling plan: K uniform in a box, gamma uniform on the sphere."""

    count: int = 1000
    seed: int = 15
    k_low: float = -3.0
    k_high: float = 3.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not (np.isfinite(self.k_low) and np.isfinite(self.k_high)
                and self.k_low < self.k_high):
            raise ValueError("K sampling box must be finite and nondegenerate")


def sample_states(spec: SampleSpec) -> list[ReducedState]:
    """Deterministic sample stream: per state, 3 uniforms for K then 3
    normals for gamma (normalized)."""
    rng = np.random.default_rng(spec.seed)
    out = []
    for _ in range(spec.count):
        K = rng.uniform(spec.k_low, spec.k_high, 3)
        v = rng.normal(size=3)
        out.append(ReducedState(K, v / np.linalg.norm(v)))
    return out


def sample_gammas(count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass
class CheckResult:
    """One certified claim: worst observed value against its tolerance.

    For '<' checks worst is the largest defect and passing means
    worst < tol. For nonzero certifications ('generic') worst is the
    smallest observed statistic, tol is the calibrated threshold, and
    fraction records how many samples exceeded it.
    """

    name: str
    passed: bool
    worst: float
    tol: float
    count: int
    seed: int
    mode: str = "max<tol"
    fraction: Optional[float] = None
    witness: str = ""


@dataclass
class VerificationReport:
    params: SphereParams
    spec: SampleSpec
    entries: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_lines(self) -> list[str]:
        lines = []
        for e in self.entries:
            status = "pass" if e.passed else "fail"
            line = (f"check={e.name} status={status} worst={e.worst:.17g} "
                    f"tol={e.tol:.17g} seed={e.seed}")
            if not e.passed and e.witness:
                line += f" witness={e.witness}"
            lines.append(line)
        return lines


def _tols(overrides: dict | None) -> dict:
    tols = dict(DEFAULT_TOLERANCES)
    if overrides:
        for key, val in overrides.items():
            if key in tols:
                tols[key] = float(val)
    return tols


def _state_repr(s: ReducedState) -> str:
    vals = ",".join(f"{v:.17g}" for v in s.z)
    return f"({vals})"


def _max_check(name, values, tol, spec, states=None) -> CheckResult:
    values = np.asarray(values)
    idx = int(np.argmax(values))
    worst = float(values[idx])
    witness = _state_repr(states[idx]) if states is not None else ""
    return CheckResult(name, worst < tol, worst, tol, len(values), spec.seed,
                       witness=witness if worst >= tol else "")


def _generic_check(name, values, threshold, fraction_needed, spec, states=None) -> CheckResult:
    values = np.asarray(values)
    fraction = float(np.mean(values > threshold))
    idx = int(np.argmin(values))
    passed = fraction >= fraction_needed
    witness = "" if passed or states is None else _state_repr(states[idx])
    return CheckResult(name, passed, float(values[idx]), threshold, len(values),
                       spec.seed, mode=f"fraction>={fraction_needed:g}",
                       fraction=fraction, witness=witness)


# Jacobi ----------------------------------------------------------------------

def jacobi_suite(p: SphereParams, variant: str, spec: SampleSpec,
                 tolerances: dict | None = None) -> CheckResult:
    """Max |Jacobiator| over all coordinate triples per sampled state.

    The scaled variant must stay below tol_jacobi_scaled everywhere; the
    standard and affine variants are certified non-Jacobi through the
    fraction-above-threshold criterion.
    """
    tols = _tols(tolerances)
    table = bracket_table(p, variant)
    states = sample_states(spec)
    values = [float(np.abs(jacobiator_tensor(table, s)).max()) for s in states]
    if variant == "scaled":
        return _max_check(f"jacobi_{variant}", values, tols["tol_jacobi_scaled"], spec, states)
    threshold = tols["threshold_jacobi_standard"] if variant == "standard" \
        else tols["threshold_jacobi_affine"]
    return _generic_check(f"jacobi_{variant}", values, threshold,
                          tols["generic_fraction"], spec, states)


# Casimirs --------------------------------------------------------------------

def casimir_suite(p: SphereParams, variant: str, spec: SampleSpec,
                  tolerances: dict | None = None) -> list[CheckResult]:
    """Defect max_i |{z_i, C}| for C = K . gamma and C = |gamma|^2."""
    tols = _tols(tolerances)
    table = bracket_table(p, variant)
    states = sample_states(spec)
    fields = {"kgamma": vertical_momentum_field(), "gamma_sq": gamma_square_field()}
    results = []
    for label, f in fields.items():
        values = [float(np.abs(table.coeffs(s) @ f.gradient(s)).max()) for s in states]
        name = f"casimir_{label}_{variant}"
        if label == "kgamma" and variant == "standard":
            results.append(_generic_check(name, values, tols["threshold_casimir_standard"],
                                          tols["generic_fraction"], spec, states))
        else:
            results.append(_max_check(name, values, tols["tol_casimir"], spec, states))
    return results


# Non-integrability -----------------------------------------------------------

def nonintegrability_functional(p: SphereParams, gamma) -> float:
    """trace(T(gamma)) - gamma . T(gamma) gamma, strictly positive on the
    sphere because T is symmetric positive definite."""
    gamma = np.asarray(gamma, dtype=float)
    t = t_matrix(p, gamma)
    return float(np.trace(t) - gamma @ t @ gamma)


def _alpha_covector(p: SphereParams, z: np.ndarray) -> np.ndarray:
    """Coefficients of (K + m r^2 w) . dgamma + gamma . dK in (K, gamma)."""
    K, gamma = z[:3], z[3:]
    omega, _ = _omega_w3_raw(p, K, gamma)
    return np.concatenate([gamma, K + p.mr2 * omega])


def _d_alpha_matrix(p: SphereParams, z: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Exterior derivative of the annihilating one-form by central
    differences: W[a, b] = d_a alpha_b - d_b alpha_a."""
    jac = np.empty((6, 6))
    for a in range(6):
        zp, zm = z.copy(), z.copy()
        zp[a] += h
        zm[a] -= h
        jac[a] = (_alpha_covector(p, zp) - _alpha_covector(p, zm)) / (2.0 * h)
    return jac - jac.T


def nonintegrability_oracle(p: SphereParams, s: ReducedState, h: float = 1e-5) -> float:
    """Independent evaluation of the non-integrability functional.

    Pairs the finite-difference exterior derivative of the annihilating
    one-form with the standard table's coordinate vector fields, summed over
    the three momentum/vertical pairs, and removes the m r^2 factor.
    """
    if p.mr2 <= 0.0:
        raise ValueError("oracle needs m r^2 > 0")
    lam = brackets.standard_coeffs(p, s)
    w_mat = _d_alpha_matrix(p, s.z, h)
    total = 0.0
    for l in range(3):
        x_k = lam[:, l]
        x_g = -lam[:, 3 + l]
        total += float(x_k @ w_mat @ x_g)
    return total / p.mr2


def nonintegrability_suite(p: SphereParams, spec: SampleSpec,
                           tolerances: dict | None = None,
                           oracle_states: int = 10) -> list[CheckResult]:
    """Positivity of the functional over sampled gammas plus the two-form
    oracle consistency check at a few full states."""
    tols = _tols(tolerances)
    gammas = sample_gammas(spec.count, spec.seed)
    values = np.array([nonintegrability_functional(p, g) for g in gammas])
    idx = int(np.argmin(values))
    worst = float(values[idx])
    positivity = CheckResult("nonintegrability_positive", worst > 0.0, worst, 0.0,
                             len(values), spec.seed, mode="min>0",
                             witness="" if worst > 0.0 else
                             "(" + ",".join(f"{v:.17g}" for v in gammas[idx]) + ")")
    results = [positivity]
    if p.mr2 > 0.0:
        states = sample_states(replace(spec, count=min(oracle_states, spec.count)))
        defects = [abs(nonintegrability_oracle(p, s) - nonintegrability_functional(p, s.gamma))
                   for s in states]
        results.append(_max_check("nonintegrability_oracle", defects,
                                  tols["tol_nonintegrability_oracle"], spec, states))
    return results


# Annihilating one-form -------------------------------------------------------

def alpha_annihilation(p: SphereParams, spec: SampleSpec,
                       tolerances: dict | None = None) -> CheckResult:
    """Max pairing of the one-form with the six coordinate Hamiltonian
    fields of the standard table."""
    tols = _tols(tolerances)
    states = sample_states(spec)
    values = []
    for s in states:
        lam = brackets.standard_coeffs(p, s)
        a = _alpha_covector(p, s.z)
        values.append(float(np.abs(a @ lam).max()))
    return _max_check("alpha_annihilation", values, tols["tol_alpha"], spec, states)


# Involution and flow commutation ---------------------------------------------

def _flow(rhs: Callable[[np.ndarray], np.ndarray], z0: np.ndarray,
          horizon: float, dt: float) -> np.ndarray:
    steps = max(1, int(round(horizon / dt)))
    step_dt = horizon / steps
    z = z0.copy()
    for step in range(steps):
        z = rk4_step(rhs, z, step_dt)
        if not np.all(np.isfinite(z)):
            raise IntegrationError(step + 1)
    return z


def involution_and_commutation(p: SphereParams, s0: ReducedState, s: float, t: float,
                               dt: float = 1e-4,
                               tolerances: dict | None = None) -> list[CheckResult]:
    """|{H, J}| under all three tables at s0, and the flow commutator of the
    mu-scaled affine fields of H and J over times (t, s), with the unscaled
    pair as the negative control."""
    tols = _tols(tolerances)
    f_h = energy_field(p)
    f_j = momentum_square_field()

    inv_values = [abs(bracket_eval(bracket_table(p, v), f_h, f_j, s0)) for v in VARIANTS]
    entries = [CheckResult("involution_hj", max(inv_values) < tols["tol_involution"],
                           max(inv_values), tols["tol_involution"], len(VARIANTS),
                           0, witness="")]

    table = bracket_table(p, "affine")

    def x_h(z):
        st = ReducedState(z[:3], z[3:])
        return table.coeffs(st) @ f_h.gradient(st)

    def x_j(z):
        st = ReducedState(z[:3], z[3:])
        return table.coeffs(st) @ f_j.gradient(st)

    def scaled(rhs):
        return lambda z: _mu_raw(p, z[3:]) * rhs(z)

    def defect(rhs_a, rhs_b):
        forward = _flow(rhs_b, _flow(rhs_a, s0.z, t, dt), s, dt)
        backward = _flow(rhs_a, _flow(rhs_b, s0.z, s, dt), t, dt)
        return float(np.linalg.norm(forward - backward))

    d_scaled = defect(scaled(x_h), scaled(x_j))
    entries.append(CheckResult("commute_scaled", d_scaled < tols["tol_commute"],
                               d_scaled, tols["tol_commute"], 1, 0,
                               witness="" if d_scaled < tols["tol_commute"]
                               else _state_repr(s0)))
    d_raw = defect(x_h, x_j)
    entries.append(CheckResult("commute_unscaled_control", d_raw > tols["tol_commute"],
                               d_raw, tols["tol_commute"], 1, 0, mode="min>tol",
                               witness="" if d_raw > tols["tol_commute"]
                               else _state_repr(s0)))
    return entries


# Invariant measure -----------------------------------------------------------

def measure_suite(p: SphereParams, spec: SampleSpec,
                  tolerances: dict | None = None) -> list[CheckResult]:
    """Weighted divergence vanishes; unweighted divergence generically does
    not (negative control)."""
    tols = _tols(tolerances)
    states = sample_states(spec)
    weighted = [abs(divergence_weighted(p, s)) for s in states]
    unweighted = [abs(divergence_unweighted(p, s)) for s in states]
    return [
        _max_check("measure_weighted", weighted, tols["tol_measure"], spec, states),
        _generic_check("measure_unweighted_control", unweighted,
                       tols["threshold_measure_unweighted"],
                       tols["generic_fraction"], spec, states),
    ]


# Bracket-dynamics agreement ----------------------------------------------------

def bracket_dynamics_suite(p: SphereParams, spec: SampleSpec,
                           tolerances: dict | None = None) -> CheckResult:
    """Lambda grad(H) equals (K x w, gamma x w) for standard and affine."""
    tols = _tols(tolerances)
    states = sample_states(spec)
    f_h = energy_field(p)
    values = []
    for s in states:
        rhs = _reduced_rhs_z(p, s.z)
        worst = 0.0
        for variant in ("standard", "affine"):
            lam = bracket_table(p, variant).coeffs(s)
            worst = max(worst, float(np.abs(lam @ f_h.gradient(s) - rhs).max()))
        values.append(worst)
    return _max_check("bracket_dynamics", values, tols["tol_bracket_dynamics"], spec, states)


# Reduction consistency ---------------------------------------------------------

def _consistency_defect(p: SphereParams, initial: MultiplierState,
                        horizon: float, dt: float, stride: int = 10) -> float:
    steps = max(1, int(round(horizon / dt)))
    stride = min(stride, steps)
    traj_m = integrate_multiplier(p, initial, dt, steps, stride=stride)
    traj_r = integrate_reduced(p, initial.reduced(p), dt, steps, stride=stride)
    diff = traj_m.reduced_z() - traj_r.reduced_z()
    return float(np.linalg.norm(diff, axis=1).max())


def reduction_consistency(p: SphereParams, initial: MultiplierState,
                          horizon: float, dt: float,
                          tolerances: dict | None = None) -> CheckResult:
    """Max distance between the projected multiplier trajectory and the
    reduced trajectory started from matching data."""
    tols = _tols(tolerances)
    worst = _consistency_defect(p, initial, horizon, dt)
    return CheckResult("consistency_multiplier", worst < tols["tol_consistency"],
                       worst, tols["tol_consistency"],
                       int(round(horizon / dt)), 0)


def reduction_order(p: SphereParams, initial: MultiplierState,
                    horizon: float = 2.0,
                    dts: tuple = (0.02, 0.01, 0.005),
                    tolerances: dict | None = None) -> CheckResult:
    """Observed order of the projection defect under step refinement; RK4
    gives slopes near 4."""
    tols = _tols(tolerances)
    defects = [_consistency_defect(p, initial, horizon, dt, stride=1) for dt in dts]
    orders = [np.log2(defects[i] / defects[i + 1]) for i in range(len(dts) - 1)]
    worst = float(min(orders))
    return CheckResult("consistency_order", worst >= tols["min_consistency_order"],
                       worst, tols["min_consistency_order"], len(dts), 0,
                       mode="min-order>=tol")


# Aggregation -------------------------------------------------------------------

def default_generic_state() -> ReducedState:
    g0 = exp_rotation(DEFAULT_ROTATION)
    return ReducedState(np.array(DEFAULT_K0), poisson_vector(g0))


def default_multiplier_initial(p: SphereParams) -> MultiplierState:
    return multiplier_state_from_reduced(p, exp_rotation(DEFAULT_ROTATION),
                                         np.array(DEFAULT_K0))


def run_all(p: SphereParams, spec: SampleSpec,
            tolerances: dict | None = None, *,
            commute_times: tuple[float, float] = (0.1, 0.1),
            commute_dt: float = 1e-4,
            consistency_horizon: float = 10.0,
            consistency_dt: float = 1e-3,
            nonintegrability_count: int = 10000) -> VerificationReport:
    """Run every suite and aggregate. Failures of individual suites (raised
    errors included) become failed entries; the batch never aborts."""
    report = VerificationReport(params=p, spec=spec)

    def guarded(name: str, thunk: Callable[[], object]):
        try:
            result = thunk()
        except Exception as exc:  # noqa: BLE001 - report and continue
            report.entries.append(CheckResult(name, False, float("nan"), float("nan"),
                                              0, spec.seed, witness=f"error:{exc!r}"))
            return
        if isinstance(result, CheckResult):
            report.entries.append(result)
        else:
            report.entries.extend(result)

    for variant in VARIANTS:
        guarded(f"jacobi_{variant}", lambda v=variant: jacobi_suite(p, v, spec, tolerances))
    for variant in VARIANTS:
        guarded(f"casimir_{variant}", lambda v=variant: casimir_suite(p, v, spec, tolerances))
    guarded("nonintegrability", lambda: nonintegrability_suite(
        p, replace(spec, count=nonintegrability_count), tolerances))
    guarded("alpha_annihilation", lambda: alpha_annihilation(p, spec, tolerances))
    guarded("involution_commutation", lambda: involution_and_commutation(
        p, default_generic_state(), commute_times[0], commute_times[1],
        commute_dt, tolerances))
    guarded("measure", lambda: measure_suite(p, spec, tolerances))
    guarded("bracket_dynamics", lambda: bracket_dynamics_suite(p, spec, tolerances))
    guarded("consistency_multiplier", lambda: reduction_consistency(
        p, default_multiplier_initial(p), consistency_horizon, consistency_dt, tolerances))
    guarded("consistency_order", lambda: reduction_order(
        p, default_multiplier_initial(p), tolerances=tolerances))
    return report
