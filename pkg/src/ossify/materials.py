"""Material laws and model parameters.

Everything here is a pure function of its inputs: the composite Hooke law
(volume-fraction-weighted sum of the bone and polymer tensors), the scaffold
mass decay sigma(t), the porosity-limited diffusivity, the strain-stimulus
norm, and the osteoblast/bone rate laws H and K.  Units are GPa / mm / months
throughout, so forces come out in kN (1 GPa * mm^2 = 1 kN).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .validation import ValidationReport

DELTA_EUCLIDEAN = "euclidean"
DELTA_TRUNCATED = "truncated"
K_SIMPLE = "simple"
K_STAGED = "staged"


@dataclass(frozen=True)
class ParameterSet:
    """All model constants plus discretization controls.

    Rate constants are per month, stiffnesses in GPa, lengths in mm.  The
    defaults reproduce the reference cylinder-defect configuration; k2/k3
    must have one entry per signalling molecule.
    """

    T: float = 12.0                 # simulated period, months
    k1: float = 0.1                 # polymer molecular-mass decay rate
    k2: tuple[float, ...] = (10500.0, 5250.0)   # per-molecule generation rates
    k3: tuple[float, ...] = (16.0, 8.0)         # per-molecule decay rates
    k4: float = 0.2                 # bone regeneration rate constant
    k5: float = 260.0               # free diffusivity of the molecules, mm^2/month
    k6: float = 0.5                 # osteoblast generation constant
    k7: float = 0.07                # osteoblast proliferation constant
    E_b: float = 5.0                # Young's modulus, healthy bone
    nu_b: float = 0.3
    E_rho: float = 0.5              # Young's modulus, intact polymer scaffold
    nu_rho: float = 0.46
    E_fix: float = 100.0            # Young's modulus, fixateur (titanium)
    nu_fix: float = 0.31
    traction: float = 0.001         # axial surface traction magnitude, GPa
    rho_const: float = 0.13         # spatially constant scaffold volume fraction
    c_P: float = 0.01               # admissible lower bound on rho
    C_P: float = 0.95               # admissible upper bound on rho
    dt: float = 0.125               # time step, months
    picard_tol: float = 1e-10
    cg_tol: float = 1e-9
    delta_mode: str = DELTA_EUCLIDEAN
    delta_max: float | None = None  # required when delta_mode == "truncated"
    k_variant: str = K_SIMPLE
    staged_breakpoint: float = 0.4  # bone-density crossover of the staged weights

    @property
    def n_molecules(self) -> int:
        return len(self.k2)

    def with_overrides(self, **kwargs) -> "ParameterSet":
        return replace(self, **kwargs)


def validate_parameters(params: ParameterSet) -> ValidationReport:
    """Check every admissibility bound on a parameter set.

    Also enforces the configuration rule that the rate laws H and K multiply
    at most two molecule concentrations, which for the built-in forms means
    exactly two molecules must be configured.
    """
    report = ValidationReport()
    p = params
    if not (0.0 < p.c_P <= p.rho_const <= p.C_P < 1.0):
        report.add("rho-admissibility",
                   f"need 0 < c_P <= rho_const <= C_P < 1, got c_P={p.c_P}, "
                   f"rho_const={p.rho_const}, C_P={p.C_P}")
    if p.T <= 0:
        report.add("period", f"T must be positive, got {p.T}")
    if p.dt <= 0:
        report.add("time-step", f"dt must be positive, got {p.dt}")
    elif p.T > 0 and p.dt > p.T:
        report.add("time-step", f"dt={p.dt} exceeds T={p.T}")
    if len(p.k2) != len(p.k3):
        report.add("molecule-count",
                   f"k2 has {len(p.k2)} entries but k3 has {len(p.k3)}")
    for name in ("k1", "k4", "k5", "k6", "k7"):
        if getattr(p, name) < 0:
            report.add("rate-sign", f"{name} must be >= 0, got {getattr(p, name)}")
    for name in ("k2", "k3"):
        if any(v < 0 for v in getattr(p, name)):
            report.add("rate-sign", f"all {name} entries must be >= 0")
    for name in ("E_b", "E_rho", "E_fix"):
        if getattr(p, name) <= 0:
            report.add("stiffness", f"{name} must be positive")
    for name in ("nu_b", "nu_rho", "nu_fix"):
        nu = getattr(p, name)
        if not (-1.0 < nu < 0.5):
            report.add("poisson", f"{name} must lie in (-1, 0.5), got {nu}")
    if p.traction < 0:
        report.add("traction", f"traction must be >= 0, got {p.traction}")
    if p.delta_mode not in (DELTA_EUCLIDEAN, DELTA_TRUNCATED):
        report.add("delta-mode", f"unknown delta_mode {p.delta_mode!r}")
    elif p.delta_mode == DELTA_TRUNCATED and (p.delta_max is None or p.delta_max <= 0):
        report.add("delta-mode", "truncated norm requires a positive delta_max")
    if p.k_variant not in (K_SIMPLE, K_STAGED):
        report.add("k-variant", f"unknown k_variant {p.k_variant!r}")
    elif p.k_variant == K_STAGED and p.staged_breakpoint <= 0:
        report.add("k-variant", "staged K requires a positive breakpoint")
    if p.cg_tol <= 0 or p.picard_tol <= 0:
        report.add("tolerance", "cg_tol and picard_tol must be positive")
    # The built-in H multiplies a1*a2 (two components, admissible); any other
    # molecule count would change the product degree of H, so reject it.
    if len(p.k2) != 2:
        report.add("molecule-count",
                   f"built-in H couples exactly two molecules, got {len(p.k2)}")
    return report


def lame_from_E_nu(E: float, nu: float) -> tuple[float, float]:
    """Convert Young's modulus / Poisson ratio to the Lame pair (lambda, mu)."""
    if E <= 0:
        raise ValueError(f"Young's modulus must be positive, got {E}")
    if not (-1.0 < nu < 0.5):
        raise ValueError(f"Poisson ratio must lie in (-1, 0.5), got {nu}")
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = E / (2.0 * (1.0 + nu))
    return lam, mu


@dataclass(frozen=True)
class ElasticTensorSpec:
    """Isotropic Lame pairs for the three constituents (GPa)."""

    lambda_b: float
    mu_b: float
    lambda_rho: float
    mu_rho: float
    lambda_fix: float
    mu_fix: float

    def __post_init__(self):
        for tag, lam, mu in (("bone", self.lambda_b, self.mu_b),
                             ("scaffold", self.lambda_rho, self.mu_rho),
                             ("fixateur", self.lambda_fix, self.mu_fix)):
            if mu <= 0:
                raise ValueError(f"{tag}: shear modulus must be positive, got {mu}")
            if lam + 2.0 * mu / 3.0 <= 0:
                raise ValueError(f"{tag}: bulk modulus must be positive "
                                 f"(lambda={lam}, mu={mu})")

    @classmethod
    def from_parameters(cls, params: ParameterSet) -> "ElasticTensorSpec":
        lb, mb = lame_from_E_nu(params.E_b, params.nu_b)
        lr, mr = lame_from_E_nu(params.E_rho, params.nu_rho)
        lf, mf = lame_from_E_nu(params.E_fix, params.nu_fix)
        return cls(lb, mb, lr, mr, lf, mf)


def sigma(t, k1: float):
    """Remaining molecular-mass fraction of the polymer, exp(-k1*t)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("sigma is defined for t >= 0")
    out = np.exp(-k1 * t)
    return float(out) if out.ndim == 0 else out


def composite_lame(rho, sig, b, spec: ElasticTensorSpec):
    """Effective Lame pair of the bone/scaffold composite (weighted sum bound).

    lambda_eff = b*lambda_b + rho*sigma*lambda_rho, same weighting for mu.
    Accepts scalars or arrays; broadcasting applies.
    """
    rho = np.asarray(rho, dtype=float)
    b = np.asarray(b, dtype=float)
    lam = b * spec.lambda_b + rho * sig * spec.lambda_rho
    mu = b * spec.mu_b + rho * sig * spec.mu_rho
    return lam, mu


REGION_SCAFFOLD = 0
REGION_FIXATEUR = 1


def hooke_apply(region: int, rho: float, sig: float, b: float,
                strain: np.ndarray, spec: ElasticTensorSpec) -> np.ndarray:
    """Apply the composite Hooke law to one symmetric strain tensor.

    Scaffold region: stress = b*C_bone(eps) + rho*sigma*C_polymer(eps);
    fixateur region: the titanium tensor alone.
    """
    strain = np.asarray(strain, dtype=float)
    if strain.shape != (3, 3):
        raise ValueError(f"strain must be 3x3, got shape {strain.shape}")
    if np.max(np.abs(strain - strain.T)) > 1e-12:
        raise ValueError("strain tensor is not symmetric within 1e-12")
    if region == REGION_FIXATEUR:
        lam, mu = spec.lambda_fix, spec.mu_fix
    else:
        if b > 1.0 - rho + 1e-12:
            raise ValueError(f"inadmissible state: b={b} exceeds 1-rho={1.0 - rho}")
        lam, mu = composite_lame(rho, sig, b, spec)
    return lam * np.trace(strain) * np.eye(3) + 2.0 * mu * strain


def diffusivity(rho, k5: float):
    """Isotropic molecule diffusivity k5*(1-rho), reduced by scaffold density."""
    rho = np.asarray(rho, dtype=float)
    out = k5 * (1.0 - rho)
    return float(out) if out.ndim == 0 else out


def strain_norm_delta(strain: np.ndarray, mode: str = DELTA_EUCLIDEAN,
                      delta_max: float | None = None):
    """Scalar strain stimulus of one or many symmetric 3x3 tensors.

    Euclidean mode is the Frobenius norm; truncated mode caps it at
    delta_max.  Both are globally Lipschitz with constant 1.  Accepts shape
    (3, 3) or (..., 3, 3).
    """
    strain = np.asarray(strain, dtype=float)
    norm = np.sqrt(np.sum(strain * strain, axis=(-2, -1)))
    if mode == DELTA_TRUNCATED:
        if delta_max is None or delta_max <= 0:
            raise ValueError("truncated mode requires a positive delta_max")
        norm = np.minimum(norm, delta_max)
    elif mode != DELTA_EUCLIDEAN:
        raise ValueError(f"unknown strain-norm mode {mode!r}")
    return float(norm) if norm.ndim == 0 else norm


def H_eval(a, c, b, params: ParameterSet):
    """Osteoblast generation rate k6*a1*a2*(1 + k7*c).

    `a` stacks the molecule concentrations along axis 0 (shape (2,) for
    pointwise use or (2, n) for nodal fields); c and b broadcast against the
    trailing axes.  b does not enter this form but is part of the rate-law
    signature.
    """
    a = np.asarray(a, dtype=float)
    if a.shape[0] != 2:
        raise ValueError(f"the built-in H couples exactly 2 molecules, got {a.shape[0]}")
    c = np.asarray(c, dtype=float)
    out = params.k6 * a[0] * a[1] * (1.0 + params.k7 * c)
    return float(out) if out.ndim == 0 else out


def staged_weights(b, breakpoint: float):
    """Piecewise-linear crossover weights: f1 supported on small b, f2 on large."""
    b = np.asarray(b, dtype=float)
    f1 = np.maximum(0.0, 1.0 - b / breakpoint)
    f2 = np.minimum(1.0, b / breakpoint)
    return f1, f2


def K_eval(a, c, b, params: ParameterSet):
    """Bone regeneration rate.

    Simple variant: k4*a1*c.  Staged variant: f1(b)*a1*c + f2(b)*a2*c with
    the piecewise-linear crossover weights.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    if params.k_variant == K_STAGED:
        f1, f2 = staged_weights(b, params.staged_breakpoint)
        out = (f1 * a[0] + f2 * a[1]) * c
    else:
        out = params.k4 * a[0] * c
    return float(out) if out.ndim == 0 else out


def check_density_admissible(rho: np.ndarray, params: ParameterSet) -> ValidationReport:
    """Report nodes where the scaffold density leaves [c_P, C_P]."""
    report = ValidationReport()
    rho = np.asarray(rho, dtype=float)
    bad = np.flatnonzero((rho < params.c_P) | (rho > params.C_P))
    if bad.size:
        report.add("density-bounds",
                   f"rho outside [{params.c_P}, {params.C_P}] at {bad.size} node(s)",
                   bad.tolist())
    return report
