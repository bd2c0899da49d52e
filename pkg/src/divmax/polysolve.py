"""Small dense polynomial system solving by total-degree homotopy continuation.

Square systems are tracked from the start system x_i^{d_i} = 1 with a random
unit-modulus gamma, an Euler predictor and a short Newton corrector, then
endpoint-polished.  Overdetermined systems are squared by random complex
combinations under several seeds; only solutions that verify against the
original equations and reappear under every seed are kept, and instability
across seeds marks the solution set as suspected positive-dimensional.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Polynomial",
    "SolutionPoint",
    "SolutionSet",
    "AllPathsFailed",
    "PathBudgetExceeded",
    "solve_total_degree",
    "solve_polynomial_system",
    "filter_real_positive",
    "newton_refine",
]

DEDUP_TOL = 1e-10
SINGULAR_MERGE_TOL = 1e-4
CONVERGED_RESIDUAL = 1e-8
SINGULAR_CONDITION = 1e8


class AllPathsFailed(RuntimeError):
    """Every continuation path diverged or stalled."""


class PathBudgetExceeded(RuntimeError):
    """The Bezout path count exceeds the configured budget."""


@dataclass(frozen=True)
class Polynomial:
    """Sparse polynomial with complex coefficients over ``nvars`` variables."""

    nvars: int
    terms: tuple[tuple[complex, tuple[int, ...]], ...]

    @staticmethod
    def from_dict(nvars: int, coeffs: dict) -> "Polynomial":
        terms = tuple(
            (complex(c), tuple(e)) for e, c in sorted(coeffs.items()) if c != 0
        )
        return Polynomial(nvars, terms)

    def degree(self) -> int:
        return max((sum(e) for _, e in self.terms), default=0)

    def evaluate(self, x: Sequence[complex]) -> complex:
        total = 0j
        for c, e in self.terms:
            term = c
            for xi, ei in zip(x, e):
                if ei:
                    term *= xi**ei
            total += term
        return total

    def coefficient_scale(self) -> float:
        return max((abs(c) for c, _ in self.terms), default=0.0)


class _Compiled:
    """Vectorized evaluation of a polynomial system and its Jacobian."""

    def __init__(self, system: Sequence[Polynomial]):
        self.n_eqs = len(system)
        self.nvars = system[0].nvars
        exps, coeffs, owner = [], [], []
        for i, p in enumerate(system):
            for c, e in p.terms:
                exps.append(e)
                coeffs.append(c)
                owner.append(i)
        self.E = np.array(exps, dtype=np.int64)
        self.C = np.array(coeffs, dtype=np.complex128)
        self.owner = np.array(owner)
        self.scales = np.array(
            [max(p.coefficient_scale(), 1.0) for p in system]
        )

    def eval(self, x: np.ndarray) -> np.ndarray:
        powers = np.power(x[None, :], self.E).prod(axis=1)
        vals = np.zeros(self.n_eqs, dtype=np.complex128)
        np.add.at(vals, self.owner, self.C * powers)
        return vals

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        jac = np.zeros((self.n_eqs, self.nvars), dtype=np.complex128)
        for j in range(self.nvars):
            mask = self.E[:, j] > 0
            if not mask.any():
                continue
            Ed = self.E[mask].copy()
            Ed[:, j] -= 1
            powers = np.power(x[None, :], Ed).prod(axis=1)
            contrib = self.C[mask] * self.E[mask, j] * powers
            np.add.at(jac[:, j], self.owner[mask], contrib)
        return jac

    def relative_residual(self, x: np.ndarray) -> float:
        return float(np.max(np.abs(self.eval(x)) / self.scales))


@dataclass
class SolutionPoint:
    x: np.ndarray
    residual: float
    singular: bool
    converged: bool
    multiplicity: int = 1


@dataclass
class SolutionSet:
    points: list[SolutionPoint]
    paths_tracked: int
    paths_failed: int
    paths_diverged: int
    paths_converged: int
    bezout: int
    positive_dim_suspected: bool = False

    def converged_points(self) -> list[SolutionPoint]:
        return [p for p in self.points if p.converged]


def _track_path(
    F: _Compiled, G: _Compiled, gamma: complex, start: np.ndarray
) -> tuple[str, np.ndarray]:
    """Track one path of H = (1-t) gamma G + t F from t=0; returns status.

    Statuses: "arrived" (t reached 1), "near" (step size collapsed close to
    t=1, endpoint worth polishing: this is the poor man's endgame for
    singular endpoints) and "failed"/"diverged".
    """
    x = start.astype(np.complex128)
    t = 0.0
    dt = 0.05
    steps = 0
    while t < 1.0 - 1e-12 and steps < 10_000:
        steps += 1
        dt = min(dt, 1.0 - t)
        Jt = (1 - t) * gamma * G.jacobian(x) + t * F.jacobian(x)
        Ht = F.eval(x) - gamma * G.eval(x)
        try:
            dx = np.linalg.solve(Jt, -Ht * dt)
        except np.linalg.LinAlgError:
            dx = None
        accepted = False
        if dx is not None and np.isfinite(dx).all():
            x_new = x + dx
            t_new = t + dt
            delta_norm = np.inf
            for _ in range(3):
                Jc = (1 - t_new) * gamma * G.jacobian(x_new) + t_new * F.jacobian(x_new)
                Hc = (1 - t_new) * gamma * G.eval(x_new) + t_new * F.eval(x_new)
                try:
                    delta = np.linalg.solve(Jc, -Hc)
                except np.linalg.LinAlgError:
                    break
                if not np.isfinite(delta).all():
                    break
                x_new = x_new + delta
                delta_norm = np.abs(delta).max()
                if delta_norm < 1e-10 * (1.0 + np.abs(x_new).max()):
                    break
            if delta_norm < 1e-8 * (1.0 + np.abs(x_new).max()):
                x, t = x_new, t_new
                accepted = True
        if accepted:
            dt = min(dt * 2.0, 0.1)
            if np.abs(x).max() > 1e9:
                return "diverged", x
        else:
            dt /= 2.0
            if dt < 1e-11:
                return ("near", x) if t > 0.95 else ("failed", x)
    if steps >= 10_000:
        return "failed", x
    return "arrived", x


def _polish(
    F: _Compiled, x: np.ndarray, iters: int = 50
) -> tuple[np.ndarray, float, float]:
    """Newton / Gauss-Newton polish; returns (x, residual, last step size)."""
    best_x, best_res = x.copy(), F.relative_residual(x)
    last_delta = np.inf
    for _ in range(iters):
        J = F.jacobian(x)
        fx = F.eval(x)
        try:
            if F.n_eqs == F.nvars:
                delta = np.linalg.solve(J, -fx)
            else:
                delta, *_ = np.linalg.lstsq(J, -fx, rcond=None)
        except np.linalg.LinAlgError:
            break
        if not np.isfinite(delta).all():
            break
        x = x + delta
        last_delta = float(np.abs(delta).max())
        res = F.relative_residual(x)
        if res < best_res:
            best_x, best_res = x.copy(), res
        if res < 1e-15 or last_delta < 1e-15 * (1 + np.abs(x).max()):
            break
    return best_x, best_res, last_delta


def _is_singular(F: _Compiled, x: np.ndarray, last_delta: float = 0.0) -> bool:
    """Singularity flag: ill-conditioned Jacobian or stalled (non-quadratic)
    final Newton convergence, the signature of a multiple root."""
    if last_delta > 1e-9 * (1.0 + np.abs(x).max()):
        return True
    J = F.jacobian(x)
    if F.n_eqs == F.nvars:
        cond = np.linalg.cond(J)
    else:
        s = np.linalg.svd(J, compute_uv=False)
        cond = np.inf if s[-1] == 0 else s[0] / s[min(len(s), F.nvars) - 1]
    return not np.isfinite(cond) or cond > SINGULAR_CONDITION


def _dedup(points: list[SolutionPoint]) -> list[SolutionPoint]:
    """Cluster endpoints, accumulating path counts as multiplicities.

    Regular endpoints agree to machine precision and merge at the tight
    tolerance; endpoints at a multiple root land within Newton-limited
    distance of it and are merged on the coarser singular radius.
    """
    out: list[SolutionPoint] = []
    for p in sorted(
        points, key=lambda sp: tuple(np.round(sp.x, 12).view(float))
    ):
        scale = 1.0 + np.abs(p.x).max()
        merged = False
        for q in out:
            dist = np.abs(p.x - q.x).max()
            radius = (
                SINGULAR_MERGE_TOL * scale
                if (p.singular and q.singular)
                else DEDUP_TOL * scale
            )
            if dist < radius:
                q.multiplicity += p.multiplicity
                if p.residual < q.residual:
                    q.x, q.residual = p.x, p.residual
                merged = True
                break
        if not merged:
            out.append(SolutionPoint(p.x.copy(), p.residual, p.singular,
                                     p.converged, p.multiplicity))
    return out


def _positive_dim_probe(F: _Compiled, points: list[SolutionPoint]) -> bool:
    """Heuristic test for a positive-dimensional component.

    Two or more distinct singular solutions are suspicious; blends between
    them are Gauss-Newton-projected back onto the variety, and a projected
    point that stays away from every known solution exposes a continuum.
    """
    singular = [p for p in points if p.singular]
    if len(singular) < 2:
        return False
    for i in range(len(singular)):
        for j in range(i + 1, len(singular)):
            for w in (0.5, 0.3, 0.7):
                mid = w * singular[i].x + (1 - w) * singular[j].x
                y, res, _ = _polish(F, mid, iters=80)
                if res >= CONVERGED_RESIDUAL:
                    continue
                scale = 1.0 + np.abs(y).max()
                if all(
                    np.abs(y - p.x).max() > 1e-3 * scale for p in points
                ):
                    return True
    return False


def solve_total_degree(
    system: Sequence[Polynomial], seed: int = 0, max_paths: int = 100_000
) -> SolutionSet:
    """All isolated solutions of a square system by total-degree homotopy."""
    system = [p for p in system]
    if not system:
        raise ValueError("empty system")
    nvars = system[0].nvars
    if len(system) != nvars:
        raise ValueError("system must be square; use solve_polynomial_system")
    degrees = [p.degree() for p in system]
    if any(d == 0 for d in degrees):
        # A nonzero constant equation: no solutions at all.
        return SolutionSet([], 0, 0, 0, 0, 0)
    bezout = 1
    for d in degrees:
        bezout *= d
    if bezout > max_paths:
        raise PathBudgetExceeded(f"bezout {bezout} > budget {max_paths}")

    rng = np.random.default_rng(seed)
    angle = rng.uniform(0, 2 * np.pi)
    gamma = complex(np.cos(angle), np.sin(angle))

    # Normalize each equation to unit coefficient scale; the start system has
    # O(1) coefficients and wildly scaled targets stall the corrector.
    system = [
        Polynomial(
            p.nvars,
            tuple((c / p.coefficient_scale(), e) for c, e in p.terms),
        )
        for p in system
    ]
    F = _Compiled(system)
    start_polys = []
    for i, d in enumerate(degrees):
        e_hi = [0] * nvars
        e_hi[i] = d
        start_polys.append(
            Polynomial.from_dict(nvars, {tuple(e_hi): 1.0, (0,) * nvars: -1.0})
        )
    G = _Compiled(start_polys)

    roots_per_var = [
        [np.exp(2j * np.pi * k / d) for k in range(d)] for d in degrees
    ]
    failed = diverged = converged = 0
    endpoints: list[SolutionPoint] = []
    for combo in product(*roots_per_var):
        status, x = _track_path(F, G, gamma, np.array(combo))
        if status == "diverged":
            diverged += 1
            continue
        if status == "failed":
            failed += 1
            continue
        x, res, last_delta = _polish(F, x)
        if not np.isfinite(x).all() or np.abs(x).max() > 1e8:
            diverged += 1
            continue
        if res < CONVERGED_RESIDUAL:
            converged += 1
            endpoints.append(
                SolutionPoint(x, res, _is_singular(F, x, last_delta), True)
            )
        else:
            # "near" endpoints that fail to polish were stalling paths.
            failed += 1
    if converged == 0 and failed == bezout:
        raise AllPathsFailed("no continuation path reached a solution")
    points = _dedup(endpoints)
    suspected = _positive_dim_probe(F, points)
    return SolutionSet(
        points, bezout, failed, diverged, converged, bezout, suspected
    )


def _random_square(
    system: Sequence[Polynomial], nvars: int, rng: np.random.Generator
) -> list[Polynomial]:
    k = len(system)
    M = rng.standard_normal((nvars, k)) + 1j * rng.standard_normal((nvars, k))
    M /= np.abs(M).sum(axis=1, keepdims=True)
    out = []
    for i in range(nvars):
        coeffs: dict[tuple[int, ...], complex] = {}
        for j, p in enumerate(system):
            for c, e in p.terms:
                coeffs[e] = coeffs.get(e, 0j) + M[i, j] * c
        out.append(Polynomial.from_dict(nvars, coeffs))
    return out


def solve_polynomial_system(
    system: Sequence[Polynomial],
    seed: int = 0,
    max_paths: int = 100_000,
    n_seeds: int = 3,
) -> SolutionSet:
    """Solve a square or overdetermined system.

    Overdetermined systems are reduced to square ones by random complex
    combinations; a solution must verify against the original equations and
    be recovered under all ``n_seeds`` randomizations to count.  Unstable
    counts or lost matches set ``positive_dim_suspected``.
    """
    system = list(system)
    if not system:
        raise ValueError("empty system")
    nvars = system[0].nvars
    if len(system) == nvars:
        return solve_total_degree(system, seed=seed, max_paths=max_paths)
    if len(system) < nvars:
        raise ValueError("underdetermined system")

    F = _Compiled(system)
    runs: list[list[SolutionPoint]] = []
    tracked = failed = diverged = converged = bez = 0
    for s in range(n_seeds):
        rng = np.random.default_rng((seed + 1) * 7919 + s)
        squared = _random_square(system, nvars, rng)
        sol = solve_total_degree(squared, seed=seed + 101 * s, max_paths=max_paths)
        tracked += sol.paths_tracked
        failed += sol.paths_failed
        diverged += sol.paths_diverged
        converged += sol.paths_converged
        bez = max(bez, sol.bezout)
        verified = []
        for p in sol.converged_points():
            x, res, last_delta = _polish(F, p.x)
            if res < CONVERGED_RESIDUAL:
                verified.append(
                    SolutionPoint(x, res, _is_singular(F, x, last_delta), True,
                                  p.multiplicity)
                )
        runs.append(_dedup(verified))

    counts = [len(r) for r in runs]
    common: list[SolutionPoint] = []
    for p in runs[0]:
        scale = 1.0 + np.abs(p.x).max()
        # Endpoints at singular roots scatter at the Newton stall radius, so
        # they are matched across seeds much more loosely.
        radius = (1e-3 if p.singular else 1e-6) * scale
        if all(
            any(np.abs(p.x - q.x).max() < radius for q in other)
            for other in runs[1:]
        ):
            common.append(p)
    common = _dedup(common)
    unstable = len(set(counts)) > 1 or (counts and len(common) < min(counts))
    suspected = unstable or _positive_dim_probe(F, common)
    return SolutionSet(
        common, tracked, failed, diverged, converged, bez, suspected
    )


def filter_real_positive(
    solutions: SolutionSet | Iterable[SolutionPoint],
    box: Sequence[tuple[float, float] | None] | None = None,
    tol: float = 1e-8,
) -> list[np.ndarray]:
    """Real solutions inside an open per-variable box (default (0,1))."""
    points = (
        solutions.converged_points()
        if isinstance(solutions, SolutionSet)
        else list(solutions)
    )
    out = []
    for p in points:
        if np.abs(p.x.imag).max() > tol:
            continue
        xr = p.x.real.copy()
        bounds = box if box is not None else [(0.0, 1.0)] * len(xr)
        ok = True
        for val, bd in zip(xr, bounds):
            lo, hi = bd if bd is not None else (0.0, 1.0)
            if not (lo + tol < val < hi - tol):
                ok = False
                break
        if ok:
            out.append(xr)
    return out


def newton_refine(
    system: Sequence[Polynomial], point: Sequence[complex], iters: int = 30
) -> tuple[np.ndarray, float, bool]:
    """Newton (or Gauss-Newton) polish; returns (point, residual, singular)."""
    F = _Compiled(list(system))
    x = np.asarray(point, dtype=np.complex128)
    x, res, last_delta = _polish(F, x, iters=iters)
    return x, res, _is_singular(F, x, last_delta)
