"""Haar sweeps and multi-start simplex searches for peripheral eigenvalues."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .channel import build_phi, z_max_modulus
from .errors import SizeLimitError, ValidationError
from .gates import (
    dual_unitarity_residual,
    haar_gate,
    kak_gate,
    max_linear_entropy,
    operator_schmidt,
    qutrit_gate,
)
from .linalg import DEFAULT_MAX_SUPEROP_DIM, RngStream

PERIPHERAL_TOL = 1e-6
POLISH_TOL = 1e-9
PATTERN_TOL = 1e-3
LOW_ENTROPY = 0.5
#: E within this of the maximum counts as dual-unitary for a search hit.
#: Hits are only located to ~sqrt(1 - |z_max|) in parameter space, so the
#: strict unitarity residual of the space-direction map is too tight here.
HIT_DUAL_TOL = 1e-4


# -- sweeps --------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    d: int
    M: int
    samples: int
    seed: int
    z_max_moduli: np.ndarray
    eps: float = PERIPHERAL_TOL

    @property
    def peripheral_count(self):
        return int(np.sum(self.z_max_moduli >= 1 - self.eps))

    @property
    def mean(self):
        return float(np.mean(self.z_max_moduli))


def haar_sweep(d, M, samples, rng: RngStream, eps=PERIPHERAL_TOL, max_dim=DEFAULT_MAX_SUPEROP_DIM):
    """|z_max| of Phi_M for ``samples`` Haar gates; sample i uses ``rng.child(i)``."""
    if samples < 1:
        raise ValidationError("samples must be >= 1", "samples")
    if d ** (2 * M) > max_dim:
        raise SizeLimitError(f"superoperator dimension {d ** (2 * M)} exceeds cap {max_dim}")
    z = np.array([z_max_modulus(build_phi(haar_gate(d, rng.child(i)), M, max_dim))
                  for i in range(samples)])
    return SweepResult(d, M, samples, rng.master_seed, z, eps)


# -- parameter spaces ----------------------------------------------------------

def wrap_coupling(J):
    """Map couplings onto [-pi/2, pi/2)."""
    return (np.asarray(J, dtype=float) + np.pi / 2) % np.pi - np.pi / 2


@dataclass(frozen=True)
class ParamSpace:
    """Flat parameter vector <-> gate for one family.

    kak: (Jx, Jy, Jz, u, u', v, v') with 3 exponent coordinates per local.
    qutrit24: (J_1..J_8, u, v); u' and v' cannot change Phi_1 and are fixed
    to the identity.
    """

    family: str
    n_couplings: int
    local_names: tuple
    local_size: int

    @property
    def size(self):
        return self.n_couplings + self.local_size * len(self.local_names)

    def split(self, x):
        x = np.asarray(x, dtype=float)
        J = wrap_coupling(x[: self.n_couplings])
        locs = {}
        for i, name in enumerate(self.local_names):
            a = self.n_couplings + i * self.local_size
            locs[name] = x[a: a + self.local_size]
        return J, locs

    def gate(self, x):
        J, locs = self.split(x)
        if self.family == "kak":
            return kak_gate(*J, **locs)
        return qutrit_gate(J, **locs)

    def sample(self, gen):
        J = gen.uniform(-np.pi / 2, np.pi / 2, self.n_couplings)
        return np.concatenate([J, gen.normal(size=self.size - self.n_couplings)])


SPACES = {
    "kak": ParamSpace("kak", 3, ("u", "u_p", "v", "v_p"), 3),
    "qutrit24": ParamSpace("qutrit24", 8, ("u", "v"), 8),
}


def param_space(family):
    try:
        return SPACES[family]
    except KeyError:
        raise ValidationError(f"no search space for family {family!r}", "family") from None


# -- conjecture pattern --------------------------------------------------------

def conjecture_pattern(J, tol=PATTERN_TOL):
    """Check the pattern: some |J_a| = pi/4 and another |J_b| = k pi/4, k in {0, 1, 2}.

    Returns the matched axes, k and the worst deviation used in the match.
    """
    A = np.abs(wrap_coupling(J))
    best = {"matches": False, "alpha": None, "beta": None, "k": None, "deviation": None}
    for a in range(3):
        da = abs(A[a] - np.pi / 4)
        if da > tol:
            continue
        for b in range(3):
            if b == a:
                continue
            k = int(np.round(A[b] / (np.pi / 4)))
            db = abs(A[b] - k * np.pi / 4)
            if db <= tol and k in (0, 1, 2):
                dev = max(da, db)
                if best["deviation"] is None or dev < best["deviation"]:
                    best = {"matches": True, "alpha": a, "beta": b, "k": k, "deviation": float(dev)}
    return best


# -- optimisation --------------------------------------------------------------

@dataclass(frozen=True)
class SearchHit:
    family: str
    M: int
    params: np.ndarray
    couplings: np.ndarray
    one_minus_zmax: float
    entropy: float
    dual_residual: float
    dual_unitary: bool
    pattern: dict
    restart: int
    evaluations: int
    low_entropy_flag: bool = False

    def gate(self):
        return param_space(self.family).gate(self.params)


@dataclass
class SearchResult:
    family: str
    M: int
    restarts: int
    seed: int
    hits: list = field(default_factory=list)
    best_values: list = field(default_factory=list)

    @property
    def flagged(self):
        return [h for h in self.hits if h.low_entropy_flag]


def peripheral_objective(space: ParamSpace, M):
    def f(x):
        return 1.0 - z_max_modulus(build_phi(space.gate(x), M))
    return f


def simplex_descent(f, x0, maxfev=2000, target=POLISH_TOL, max_launches=6):
    """Nelder-Mead, relaunched from its own best point while it still improves.

    Each launch gets a fresh simplex and at most ``maxfev`` evaluations.
    """
    opts = {"maxfev": maxfev, "xatol": 1e-12, "fatol": 1e-15, "adaptive": True}
    x, fx, nfev = np.asarray(x0, dtype=float), f(x0), 1
    for _ in range(max_launches):
        res = minimize(f, x, method="Nelder-Mead", options=opts)
        nfev += res.nfev
        improved = res.fun < fx * (1 - 1e-3)
        if res.fun < fx:
            x, fx = res.x, float(res.fun)
        if fx <= target or not improved:
            break
    return x, fx, nfev


def annotate_hit(space: ParamSpace, M, x, value, restart, nfev, pattern_tol=PATTERN_TOL):
    g = space.gate(x)
    d = g.d
    E = operator_schmidt(g).linear_entropy
    J, _ = space.split(x)
    pattern = conjecture_pattern(J, pattern_tol) if space.family == "kak" else {}
    x = np.asarray(x, dtype=float).copy()
    x[: space.n_couplings] = J
    return SearchHit(space.family, M, x, J, float(value), float(E), dual_unitarity_residual(g),
                     bool(E >= max_linear_entropy(d) - HIT_DUAL_TOL), pattern, restart, nfev,
                     bool(E < LOW_ENTROPY - 1e-9))


def optimize_peripheral(family, M, restarts, rng: RngStream, maxfev=2000, hit_tol=PERIPHERAL_TOL,
                        polish_tol=POLISH_TOL, max_launches=6, pattern_tol=PATTERN_TOL,
                        max_dim=DEFAULT_MAX_SUPEROP_DIM):
    """Multi-start search maximising |z_max| of Phi_M; restart i uses ``rng.child(i)``."""
    space = param_space(family)
    d = 2 if family == "kak" else 3
    if d ** (2 * M) > max_dim:
        raise SizeLimitError(f"superoperator dimension {d ** (2 * M)} exceeds cap {max_dim}")
    if restarts < 1:
        raise ValidationError("restarts must be >= 1", "restarts")
    f = peripheral_objective(space, M)
    out = SearchResult(family, M, restarts, rng.master_seed)
    for i in range(restarts):
        x0 = space.sample(rng.child(i).generator())
        x, fx, nfev = simplex_descent(f, x0, maxfev, polish_tol, max_launches)
        out.best_values.append(fx)
        if fx <= hit_tol:
            out.hits.append(annotate_hit(space, M, x, fx, i, nfev, pattern_tol))
    out.hits.sort(key=lambda h: (h.one_minus_zmax, tuple(h.params)))
    return out


def revalidate(hit: SearchHit):
    """|recomputed 1 - |z_max| - stored value|."""
    return abs(1 - z_max_modulus(build_phi(hit.gate(), hit.M)) - hit.one_minus_zmax)


# -- conjecture scan -----------------------------------------------------------

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class ScanPoint:
    J: np.ndarray
    J_beta: float
    J_gamma: float
    one_minus_zmax: float
    entropy: float
    peripheral: bool
    conjecture_k: int  # -1 when neither free coupling sits on k pi/4


def _scan_k(jb, jg, tol):
    for Jv in (jb, jg):
        a = abs(wrap_coupling(Jv))
        k = int(np.round(a / (np.pi / 4)))
        if abs(a - k * np.pi / 4) <= tol:
            return k
    return -1


def conjecture_scan(fixed_axis, betas, gammas, rng: RngStream, M=2, restarts=2, maxfev=2000,
                    max_launches=4, hit_tol=PERIPHERAL_TOL, pattern_tol=PATTERN_TOL):
    """Best 1 - |z_max| over the locals at each (J_beta, J_gamma) with J_fixed = pi/4.

    Locals are optimised independently at every grid point.
    """
    if fixed_axis not in AXES:
        raise ValidationError(f"fixed axis must be one of {AXES}", "fixed_axis")
    a = AXES.index(fixed_axis)
    free = [i for i in range(3) if i != a]
    betas = np.asarray(betas, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    if np.any(np.abs(betas) > np.pi / 2) or np.any(np.abs(gammas) > np.pi / 2):
        raise ValidationError("grid must lie in [-pi/2, pi/2]^2", "grid")
    points = []
    idx = 0
    for jb in betas:
        for jg in gammas:
            J = np.zeros(3)
            J[a], J[free[0]], J[free[1]] = np.pi / 4, jb, jg
            J = np.clip(J, -np.pi / 2, np.pi / 2)

            def f(locs, J=J):
                return 1.0 - z_max_modulus(build_phi(kak_gate(*J, u=locs[0:3], u_p=locs[3:6],
                                                              v=locs[6:9], v_p=locs[9:12]), M))

            best, best_x = np.inf, None
            for r in range(restarts):
                x0 = rng.child(idx).child(r).generator().normal(size=12)
                x, fx, _ = simplex_descent(f, x0, maxfev, POLISH_TOL, max_launches)
                if fx < best:
                    best, best_x = fx, x
                if best <= POLISH_TOL:
                    break
            g = kak_gate(*J, u=best_x[0:3], u_p=best_x[3:6], v=best_x[6:9], v_p=best_x[9:12])
            peripheral = best <= hit_tol
            k = _scan_k(jb, jg, pattern_tol) if peripheral else -1
            points.append(ScanPoint(J, float(jb), float(jg), float(best),
                                    operator_schmidt(g).linear_entropy, peripheral, k))
            idx += 1
    return points
