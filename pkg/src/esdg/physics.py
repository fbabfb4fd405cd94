"""Conservation-law definitions: 2D compressible Euler and 2D Burgers.

Each law bundles physical fluxes, an entropy function with its variables and
flux potentials, an entropy-conservative two-point flux, and wave speeds.
The two-point fluxes satisfy the jump condition

    (v_R - v_L) . f_ec(u_L, u_R) = psi_R - psi_L

which is the single algebraic fact all conservation and stability statements
of the solver rest on. State arrays carry the conserved variables in the last
axis; every operation broadcasts and is safe to call concurrently.
"""

from __future__ import annotations

import os

import numpy as np

try:  # optional kernel acceleration; the numpy path is the reference
    if os.environ.get("ESDG_NO_NUMBA"):
        raise ImportError
    from numba import njit as _njit
except ImportError:  # pragma: no cover - exercised via ESDG_NO_NUMBA
    _njit = None

__all__ = [
    "PhysicsError",
    "ConservationLaw",
    "EulerEquations",
    "Burgers2D",
    "make_law",
    "log_mean",
    "llf_lambda",
    "vortex_primitives",
    "vortex_conserved",
    "random_discontinuous_states",
    "piecewise_primitive_ic",
    "ROBUSTNESS_IC",
]

# preset discontinuous initial state across the x = y diagonal, used by the
# long-time robustness experiment: (rho, u, v, p) below / above the diagonal
ROBUSTNESS_IC = ((1.08, 0.2, 0.01, 0.95), (1.0, 1e-12, 1e-12, 1.0))


class PhysicsError(Exception):
    """Inadmissible thermodynamic state (not a floating-point overflow).

    Carries enough context to locate the failure in a running simulation.
    """

    def __init__(self, detail, element=None, node=None, time=None, stage=None):
        self.detail = detail
        self.element = element
        self.node = node
        self.time = time
        self.stage = stage
        parts = [detail]
        if element is not None:
            parts.append(f"element {element}")
        if node is not None:
            parts.append(f"node {node}")
        if time is not None:
            parts.append(f"t={time:.6g}")
        if stage is not None:
            parts.append(f"stage {stage}")
        super().__init__(", ".join(parts))


def log_mean(a, b, log_a=None, log_b=None):
    """Logarithmic mean (b - a) / (log b - log a), vectorized.

    Switches to a series expansion when |b/a - 1| < 1e-4 to avoid
    cancellation; log_mean(a, a) == a exactly. Pass precomputed logs to skip
    the transcendental evaluations in hot loops.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise PhysicsError("log mean requires positive arguments")
    d = b - a
    s = a + b
    u = (d / s) ** 2
    small = u < 2.5e-9
    if log_a is None:
        log_a = np.log(a)
    if log_b is None:
        log_b = np.log(b)
    den = np.where(small, 1.0, log_b - log_a)
    series = s / (2.0 * (1.0 + u * (1.0 / 3.0 + u * (1.0 / 5.0 + u / 7.0))))
    out = np.where(small, series, d / den)
    return out if out.ndim else float(out)


class ConservationLaw:
    """Interface shared by the concrete laws. All operations are pure."""

    n_vars: int
    name: str

    def conserved(self, w):
        """Primitive-to-conserved map; identity unless overridden."""
        return np.asarray(w, dtype=float)

    def flux(self, u, axis):
        raise NotImplementedError

    def entropy(self, u):
        raise NotImplementedError

    def entropy_vars(self, u):
        raise NotImplementedError

    def flux_potential(self, u, axis):
        raise NotImplementedError

    def wave_speed(self, u, axis):
        """Largest absolute flux-Jacobian eigenvalue per node, directional."""
        raise NotImplementedError

    def max_wave_speed(self, u):
        """Largest eigenvalue over both coordinate directions per node."""
        return np.maximum(self.wave_speed(u, 0), self.wave_speed(u, 1))

    def ec_aux(self, u):
        """Per-node precomputation consumed by the ``*_aux`` methods."""
        return u

    def ec_flux_aux(self, aux_a, aux_b, axis):
        raise NotImplementedError

    def entropy_vars_aux(self, aux):
        raise NotImplementedError

    def wave_speed_aux(self, aux, axis):
        raise NotImplementedError

    def ec_flux(self, u_a, u_b, axis):
        """Entropy-conservative two-point flux; symmetric and consistent."""
        return self.ec_flux_aux(self.ec_aux(u_a), self.ec_aux(u_b), axis)

    def volume_fluxes(self, aux, d_matrix):
        """Optional fused volume contraction; None selects the generic path."""
        return None

    def admissibility_violation(self, u):
        """Index of the first inadmissible node, or None if all are fine."""
        return None

    def check_admissible(self, u, element=None, time=None):
        idx = self.admissibility_violation(u)
        if idx is not None:
            raise PhysicsError(self.describe_violation(u, idx),
                               element=element, node=idx, time=time)

    def describe_violation(self, u, idx):
        return "inadmissible state"


class EulerEquations(ConservationLaw):
    """2D compressible Euler with ideal-gas pressure closure.

    Conserved state (rho, rho*u, rho*v, E); entropy
    S = -rho log(p / rho^gamma) / (gamma - 1); the two-point flux is the
    entropy-conservative flux built from the parameter vector
    z = sqrt(rho/p) * (1, u, v, p) with arithmetic and logarithmic means.
    """

    n_vars = 4
    name = "euler"

    def __init__(self, gamma: float = 1.4):
        self.gamma = float(gamma)

    def primitives(self, u):
        rho = u[..., 0]
        vel_x = u[..., 1] / rho
        vel_y = u[..., 2] / rho
        p = (self.gamma - 1.0) * (u[..., 3] - 0.5 * rho * (vel_x**2 + vel_y**2))
        return rho, vel_x, vel_y, p

    def conserved(self, w):
        """Primitives (rho, u, v, p), last axis, to conserved variables."""
        rho, vel_x, vel_y, p = w[..., 0], w[..., 1], w[..., 2], w[..., 3]
        energy = p / (self.gamma - 1.0) + 0.5 * rho * (vel_x**2 + vel_y**2)
        return np.stack([rho, rho * vel_x, rho * vel_y, energy], axis=-1)

    def flux(self, u, axis):
        rho, vel_x, vel_y, p = self.primitives(u)
        vn = vel_x if axis == 0 else vel_y
        f = np.empty_like(u)
        f[..., 0] = rho * vn
        f[..., 1] = rho * vn * vel_x
        f[..., 2] = rho * vn * vel_y
        f[..., 1 + axis] += p
        f[..., 3] = vn * (u[..., 3] + p)
        return f

    def entropy(self, u):
        rho, _, _, p = self.primitives(u)
        self.check_admissible(u)
        return -rho * (np.log(p) - self.gamma * np.log(rho)) / (self.gamma - 1.0)

    def entropy_vars(self, u):
        rho, vel_x, vel_y, p = self.primitives(u)
        self.check_admissible(u)
        s = np.log(p) - self.gamma * np.log(rho)
        v = np.empty_like(u)
        v[..., 0] = (self.gamma - s) / (self.gamma - 1.0) \
            - 0.5 * rho * (vel_x**2 + vel_y**2) / p
        v[..., 1] = rho * vel_x / p
        v[..., 2] = rho * vel_y / p
        v[..., 3] = -rho / p
        return v

    def flux_potential(self, u, axis):
        # v . f - F with entropy flux F = u S collapses to the momentum
        return u[..., 1 + axis].copy()

    def wave_speed(self, u, axis):
        rho, vel_x, vel_y, p = self.primitives(u)
        vn = vel_x if axis == 0 else vel_y
        return np.abs(vn) + np.sqrt(self.gamma * p / rho)

    # hot-path layout: (z1, z2, z3, z4, log z1, log z4) in the last axis
    def ec_aux(self, u):
        rho, vel_x, vel_y, p = self.primitives(u)
        z1 = np.sqrt(rho / p)
        aux = np.empty(u.shape[:-1] + (6,))
        aux[..., 0] = z1
        aux[..., 1] = z1 * vel_x
        aux[..., 2] = z1 * vel_y
        aux[..., 3] = np.sqrt(rho * p)
        aux[..., 4] = np.log(aux[..., 0])
        aux[..., 5] = np.log(aux[..., 3])
        return aux

    def ec_flux_aux(self, aux_a, aux_b, axis):
        if _euler_ec_rows is not None:
            if aux_a.shape == aux_b.shape:
                shape = aux_a.shape
                a = np.ascontiguousarray(aux_a).reshape(-1, 6)
                b = np.ascontiguousarray(aux_b).reshape(-1, 6)
            else:
                shape = np.broadcast_shapes(aux_a.shape, aux_b.shape)
                a = np.ascontiguousarray(
                    np.broadcast_to(aux_a, shape)).reshape(-1, 6)
                b = np.ascontiguousarray(
                    np.broadcast_to(aux_b, shape)).reshape(-1, 6)
            out = np.empty((a.shape[0], 4))
            _euler_ec_rows(a, b, self.gamma, axis, out)
            return out.reshape(shape[:-1] + (4,))
        return self._ec_flux_aux_numpy(aux_a, aux_b, axis)

    def volume_fluxes(self, aux, d_matrix):
        """Fused split-form volume contraction for a group of elements.

        Returns (vx, vy) with vx[k,i,j] = 2 sum_m D[i,m] f#(U_kij, U_kmj) and
        the analogous eta-direction term; None when the compiled kernel is
        unavailable so the caller falls back to the broadcast evaluation.
        """
        if _euler_volume_kernel is None:
            return None
        k, n = aux.shape[0], aux.shape[1]
        vx = np.zeros((k, n, n, 4))
        vy = np.zeros((k, n, n, 4))
        _euler_volume_kernel(np.ascontiguousarray(aux),
                             np.ascontiguousarray(d_matrix),
                             self.gamma, vx, vy)
        return vx, vy

    def _ec_flux_aux_numpy(self, aux_a, aux_b, axis):
        g = self.gamma
        z1_m = 0.5 * (aux_a[..., 0] + aux_b[..., 0])
        z2_m = 0.5 * (aux_a[..., 1] + aux_b[..., 1])
        z3_m = 0.5 * (aux_a[..., 2] + aux_b[..., 2])
        z4_m = 0.5 * (aux_a[..., 3] + aux_b[..., 3])
        z1_ln = log_mean(aux_a[..., 0], aux_b[..., 0], aux_a[..., 4], aux_b[..., 4])
        z4_ln = log_mean(aux_a[..., 3], aux_b[..., 3], aux_a[..., 5], aux_b[..., 5])
        rho_h = z1_m * z4_ln
        u_h = z2_m / z1_m
        v_h = z3_m / z1_m
        p1_h = z4_m / z1_m
        p2_h = ((g + 1.0) / (2.0 * g)) * z4_ln / z1_ln \
            + ((g - 1.0) / (2.0 * g)) * p1_h
        h_h = g * p2_h / ((g - 1.0) * rho_h) + 0.5 * (u_h**2 + v_h**2)
        vn = u_h if axis == 0 else v_h
        mass = rho_h * vn
        f = np.empty(np.broadcast_shapes(aux_a.shape, aux_b.shape)[:-1] + (4,))
        f[..., 0] = mass
        f[..., 1] = mass * u_h
        f[..., 2] = mass * v_h
        f[..., 1 + axis] += p1_h
        f[..., 3] = mass * h_h
        return f

    def entropy_vars_aux(self, aux):
        # rho/p = z1^2, rho*u/p = z1*z2, s from the stored logs
        z1, z2, z3 = aux[..., 0], aux[..., 1], aux[..., 2]
        log_z1, log_z4 = aux[..., 4], aux[..., 5]
        s = (log_z4 - log_z1) - self.gamma * (log_z1 + log_z4)
        v = np.empty(aux.shape[:-1] + (4,))
        v[..., 0] = (self.gamma - s) / (self.gamma - 1.0) - 0.5 * (z2**2 + z3**2)
        v[..., 1] = z1 * z2
        v[..., 2] = z1 * z3
        v[..., 3] = -z1 * z1
        return v

    def wave_speed_aux(self, aux, axis):
        # sound speed c = sqrt(gamma p / rho) = sqrt(gamma) / z1
        vn = aux[..., 1 + axis] / aux[..., 0]
        return np.abs(vn) + np.sqrt(self.gamma) / aux[..., 0]

    def admissibility_violation(self, u):
        rho, _, _, p = self.primitives(u)
        bad = ~((rho > 0.0) & (p > 0.0) & np.isfinite(rho) & np.isfinite(p))
        if bad.any():
            return np.unravel_index(int(np.argmax(bad)), bad.shape)
        return None

    def describe_violation(self, u, idx):
        rho, _, _, p = self.primitives(u)
        return f"non-admissible state rho={rho[idx]:.6g} p={p[idx]:.6g}"


class Burgers2D(ConservationLaw):
    """Scalar Burgers in both directions: f = g = u^2 / 2.

    Entropy S = u^2/2, entropy variable v = u, potential psi = u^3/6, and the
    mean-square two-point flux (a^2 + ab + b^2)/6.
    """

    n_vars = 1
    name = "burgers"

    def flux(self, u, axis):
        return 0.5 * u * u

    def entropy(self, u):
        return 0.5 * u[..., 0] ** 2

    def entropy_vars(self, u):
        return u.copy()

    def flux_potential(self, u, axis):
        return u[..., 0] ** 3 / 6.0

    def wave_speed(self, u, axis):
        return np.abs(u[..., 0])

    def ec_flux_aux(self, aux_a, aux_b, axis):
        a = aux_a[..., 0]
        b = aux_b[..., 0]
        out = (a * a + a * b + b * b) / 6.0
        return out[..., None]

    def entropy_vars_aux(self, aux):
        return aux.copy()

    def wave_speed_aux(self, aux, axis):
        return np.abs(aux[..., 0])

    def admissibility_violation(self, u):
        bad = ~np.isfinite(u[..., 0])
        if bad.any():
            return np.unravel_index(int(np.argmax(bad)), bad.shape)
        return None

    def describe_violation(self, u, idx):
        return f"non-finite state u={u[idx + (0,)]!r}"


if _njit is not None:
    @_njit(cache=True, inline="always")
    def _euler_ec_point(a, b, gamma):   # pragma: no cover - jit
        """Means entering the EC flux for one node pair (a, b are aux rows)."""
        z1m = 0.5 * (a[0] + b[0])
        z2m = 0.5 * (a[1] + b[1])
        z3m = 0.5 * (a[2] + b[2])
        z4m = 0.5 * (a[3] + b[3])
        d1 = b[0] - a[0]
        s1 = a[0] + b[0]
        u1 = (d1 / s1) ** 2
        if u1 < 2.5e-9:
            z1ln = s1 / (2.0 * (1.0 + u1 * (1.0 / 3.0
                                            + u1 * (1.0 / 5.0 + u1 / 7.0))))
        else:
            z1ln = d1 / (b[4] - a[4])
        d4 = b[3] - a[3]
        s4 = a[3] + b[3]
        u4 = (d4 / s4) ** 2
        if u4 < 2.5e-9:
            z4ln = s4 / (2.0 * (1.0 + u4 * (1.0 / 3.0
                                            + u4 * (1.0 / 5.0 + u4 / 7.0))))
        else:
            z4ln = d4 / (b[5] - a[5])
        rho_h = z1m * z4ln
        u_h = z2m / z1m
        v_h = z3m / z1m
        p1_h = z4m / z1m
        p2_h = ((gamma + 1.0) / (2.0 * gamma)) * z4ln / z1ln \
            + ((gamma - 1.0) / (2.0 * gamma)) * p1_h
        h_h = gamma * p2_h / ((gamma - 1.0) * rho_h) \
            + 0.5 * (u_h * u_h + v_h * v_h)
        return rho_h, u_h, v_h, p1_h, h_h

    @_njit(cache=True)
    def _euler_volume_kernel(aux, d_matrix, gamma, vx, vy):  # pragma: no cover
        """2 sum_m D F#(U_i, U_m) in both directions, using flux symmetry."""
        n_el, n = aux.shape[0], aux.shape[1]
        for k in range(n_el):
            for j in range(n):
                for i in range(n):
                    for m in range(i, n):
                        rho_h, u_h, v_h, p1_h, h_h = _euler_ec_point(
                            aux[k, i, j], aux[k, m, j], gamma)
                        f0 = rho_h * u_h
                        f1 = f0 * u_h + p1_h
                        f2 = f0 * v_h
                        f3 = f0 * h_h
                        c = 2.0 * d_matrix[i, m]
                        vx[k, i, j, 0] += c * f0
                        vx[k, i, j, 1] += c * f1
                        vx[k, i, j, 2] += c * f2
                        vx[k, i, j, 3] += c * f3
                        if m > i:
                            c = 2.0 * d_matrix[m, i]
                            vx[k, m, j, 0] += c * f0
                            vx[k, m, j, 1] += c * f1
                            vx[k, m, j, 2] += c * f2
                            vx[k, m, j, 3] += c * f3
            for i in range(n):
                for j in range(n):
                    for m in range(j, n):
                        rho_h, u_h, v_h, p1_h, h_h = _euler_ec_point(
                            aux[k, i, j], aux[k, i, m], gamma)
                        g0 = rho_h * v_h
                        g1 = g0 * u_h
                        g2 = g0 * v_h + p1_h
                        g3 = g0 * h_h
                        c = 2.0 * d_matrix[j, m]
                        vy[k, i, j, 0] += c * g0
                        vy[k, i, j, 1] += c * g1
                        vy[k, i, j, 2] += c * g2
                        vy[k, i, j, 3] += c * g3
                        if m > j:
                            c = 2.0 * d_matrix[m, j]
                            vy[k, i, m, 0] += c * g0
                            vy[k, i, m, 1] += c * g1
                            vy[k, i, m, 2] += c * g2
                            vy[k, i, m, 3] += c * g3

    @_njit(cache=True)
    def _euler_ec_rows(a, b, gamma, axis, out):   # pragma: no cover - jit
        # row-wise mirror of EulerEquations._ec_flux_aux_numpy
        for r in range(a.shape[0]):
            rho_h, u_h, v_h, p1_h, h_h = _euler_ec_point(a[r], b[r], gamma)
            vn = u_h if axis == 0 else v_h
            mass = rho_h * vn
            out[r, 0] = mass
            out[r, 1] = mass * u_h
            out[r, 2] = mass * v_h
            out[r, 1 + axis] += p1_h
            out[r, 3] = mass * h_h
else:
    _euler_ec_rows = None
    _euler_volume_kernel = None


def make_law(name: str, gamma: float = 1.4) -> ConservationLaw:
    if name == "euler":
        return EulerEquations(gamma=gamma)
    if name == "burgers":
        return Burgers2D()
    raise ValueError(f"unknown conservation law '{name}'")


def llf_lambda(law: ConservationLaw, states_l, states_r, axis) -> float:
    """Local Lax-Friedrichs dissipation rate for one interface.

    lambda = max(lambda_L, lambda_R) / 2 with each side's rate the largest
    directional wave speed over that side's nodes.
    """
    lam_l = float(np.max(law.wave_speed(np.asarray(states_l, dtype=float), axis)))
    lam_r = float(np.max(law.wave_speed(np.asarray(states_r, dtype=float), axis)))
    return 0.5 * max(lam_l, lam_r)


def vortex_primitives(x, y, t, gamma: float = 1.4):
    """Isentropic vortex advecting along the diagonal of [0, 10]^2.

    Returns primitives (rho, u, v, p) stacked in the last axis. The t > 0
    solution is the initial field translated by (t, t).
    """
    x = np.asarray(x, dtype=float) - t
    y = np.asarray(y, dtype=float) - t
    eps = 5.0 / (2.0 * np.pi)
    alpha = 0.5
    r2 = (x - 5.0) ** 2 + (y - 5.0) ** 2
    phi = eps * np.exp(alpha * (1.0 - r2))
    temp = 1.0 - (gamma - 1.0) / (2.0 * gamma) * phi**2
    w = np.empty(np.broadcast_shapes(x.shape, y.shape) + (4,))
    w[..., 0] = temp ** (1.0 / (gamma - 1.0))
    w[..., 1] = 1.0 - (y - 5.0) * phi
    w[..., 2] = 1.0 + (x - 5.0) * phi
    w[..., 3] = temp ** (gamma / (gamma - 1.0))
    return w


def vortex_conserved(x, y, t, gamma: float = 1.4):
    law = EulerEquations(gamma=gamma)
    return law.conserved(vortex_primitives(x, y, t, gamma=gamma))


def random_discontinuous_states(seed: int):
    """Two uniform-random primitive states for the x <= y / x > y split.

    Entries are uniform in (0, 1]; exact zeros are resampled so density and
    pressure stay admissible. Deterministic in the seed.
    """
    rng = np.random.default_rng(seed)
    states = rng.uniform(0.0, 1.0, size=(2, 4))
    while np.any(states == 0.0):
        states = np.where(states == 0.0, rng.uniform(0.0, 1.0, size=(2, 4)), states)
    return tuple(states[0]), tuple(states[1])


def piecewise_primitive_ic(state_le, state_gt):
    """Primitive-field callable: ``state_le`` where x <= y, ``state_gt`` else."""
    state_le = np.asarray(state_le, dtype=float)
    state_gt = np.asarray(state_gt, dtype=float)

    def fn(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        mask = (x <= y)[..., None]
        return np.where(mask, state_le, state_gt)

    return fn
