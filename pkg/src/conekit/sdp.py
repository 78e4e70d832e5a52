"""Small dense semidefinite programming over Hermitian matrix variables.

Solves

    minimize    tr[F0^T X]
    subject to  tr[A_k X] = b_k,   k = 1..m
                X >= 0  (PSD),

with Hermitian data, by embedding Hermitian matrices into real symmetric
ones ([Re, -Im; Im, Re]) and running a primal-dual path-following method
with Nesterov-Todd scaling and Mehrotra-style adaptive centering (an
affine predictor step fixes the centering weight of the actual step).
Instances here are tiny (n <= ~50 after embedding, m <= ~60), so the
implementation favors robustness over speed: dense eigendecompositions
everywhere, rank reduction of the constraint set up front, and exact
Farkas certificates for linearly inconsistent constraints.

``solve`` is the single entry point; an external conic solver can replace
the built-in method by passing ``backend=`` with the same
problem-to-solution contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from . import linops
from .linops import PSD_TOL, hermitize, kron

FEAS_TOL = 1e-7
MAX_ITER = 200

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_NUMERICAL_LIMIT = "numerical-limit"


class NumericalLimitError(RuntimeError):
    """The solver stopped without reaching its tolerances."""


@dataclass(frozen=True)
class SdpProblem:
    """min tr[F0^T X] over PSD X subject to tr[A_k X] = b_k."""

    n: int
    objective: np.ndarray                 # F0, Hermitian n x n
    constraint_ops: tuple[np.ndarray, ...]
    constraint_vals: tuple[float, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("variable dimension must be positive")
        if len(self.constraint_ops) == 0:
            raise ValueError("constraint list must be non-empty")
        if len(self.constraint_ops) != len(self.constraint_vals):
            raise ValueError("constraint operators and values differ in length")
        f0 = linops.check_hermitian(self.objective)
        if f0.shape != (self.n, self.n):
            raise ValueError("objective dimension does not match n")
        ops = []
        for k, a in enumerate(self.constraint_ops):
            m = linops.check_hermitian(a)
            if m.shape != (self.n, self.n):
                raise ValueError(f"constraint {k} has dimension {m.shape}, expected {self.n}")
            ops.append(m)
        object.__setattr__(self, "objective", f0)
        object.__setattr__(self, "constraint_ops", tuple(ops))
        object.__setattr__(self, "constraint_vals", tuple(float(v) for v in self.constraint_vals))


@dataclass
class SdpSolution:
    x: np.ndarray
    objective_value: float     # tr[F0^T X], the minimized cost
    primal_residual: float     # max_k |tr[A_k X] - b_k| over the full constraint set
    dual_residual: float       # relative dual infeasibility at exit
    status: str
    iterations: int = 0
    y: np.ndarray | None = None
    rank: int | None = None
    infeasibility_certificate: np.ndarray | None = None
    message: str = ""


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Orthonormal (Frobenius) basis of d x d Hermitian matrices, d**2 elements."""
    basis = []
    for j in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[j, j] = 1.0
        basis.append(e)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for j in range(d):
        for k in range(j + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = e[k, j] = inv_sqrt2
            basis.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = -1j * inv_sqrt2
            e[k, j] = 1j * inv_sqrt2
            basis.append(e)
    return basis


def assemble_fixed_point_constraints(sigmas) -> SdpProblem:
    """Build the minimum-trace SDP whose PSD variable leaves every given
    state invariant: tr[(E (x) sigma^T) X] = tr[E sigma] over a Hermitian
    basis E of the output space, objective F0 = I.

    Exactly-equal constraint rows (operator and value) are deduplicated.
    """
    states = [linops.check_density(s) for s in sigmas]
    if not states:
        raise ValueError("need at least one state")
    d = states[0].shape[0]
    for s in states:
        if s.shape != (d, d):
            raise ValueError("states must share one dimension")
    ops: list[np.ndarray] = []
    vals: list[float] = []
    for sigma in states:
        for e in hermitian_basis(d):
            a = kron(e, sigma.T)
            b = float(np.trace(e @ sigma).real)
            duplicate = any(
                np.array_equal(a, a_prev) and b == b_prev
                for a_prev, b_prev in zip(ops, vals)
            )
            if not duplicate:
                ops.append(a)
                vals.append(b)
    n = d * d
    return SdpProblem(n=n, objective=np.eye(n, dtype=complex),
                      constraint_ops=tuple(ops), constraint_vals=tuple(vals))


# ----------------------------------------------------------------------
# Real symmetric embedding of Hermitian data
# ----------------------------------------------------------------------

def _realify(h: np.ndarray) -> np.ndarray:
    return np.block([[h.real, -h.imag], [h.imag, h.real]])


def _unrealify(y: np.ndarray, n: int) -> np.ndarray:
    re = (y[:n, :n] + y[n:, n:]) / 2.0
    im = (y[n:, :n] - y[:n, n:]) / 2.0
    return hermitize(re + 1j * im)


# ----------------------------------------------------------------------
# Interior-point core (real symmetric data)
# ----------------------------------------------------------------------

def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def _max_step(s: np.ndarray, ds: np.ndarray) -> float:
    """Largest alpha with s + alpha*ds >= 0, via eigenvalues of L^-1 ds L^-T."""
    try:
        low = np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(s)
        w = np.clip(w, 1e-14, None)
        low = v @ np.diag(np.sqrt(w))
    m1 = scipy.linalg.solve_triangular(low, ds, lower=True)
    m2 = scipy.linalg.solve_triangular(low, m1.T, lower=True)
    lam_min = float(np.linalg.eigvalsh(_sym(m2)).min())
    if lam_min >= -1e-14:
        return np.inf
    return -1.0 / lam_min


def _nt_scaling(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """W > 0 with W Z W = X."""
    wz, vz = np.linalg.eigh(z)
    wz = np.clip(wz, 1e-14, None)
    z_half = vz @ np.diag(np.sqrt(wz)) @ vz.T
    z_ihalf = vz @ np.diag(1.0 / np.sqrt(wz)) @ vz.T
    b = _sym(z_half @ x @ z_half)
    wb, vb = np.linalg.eigh(b)
    wb = np.clip(wb, 1e-16, None)
    b_half = vb @ np.diag(np.sqrt(wb)) @ vb.T
    return _sym(z_ihalf @ b_half @ z_ihalf)


@dataclass
class _IpmResult:
    x: np.ndarray
    y: np.ndarray
    status: str
    iterations: int
    dual_residual: float
    message: str = ""


def _solve_real_sdp(cost: np.ndarray, ops: np.ndarray, b: np.ndarray,
                    max_iter: int, feas_tol: float, psd_tol: float) -> _IpmResult:
    n = cost.shape[0]
    m = ops.shape[0]
    a_norms = np.array([np.linalg.norm(a) for a in ops])
    xi_p = max(1.0, np.sqrt(n), np.sqrt(n) * float(np.max(np.abs(b) / (1.0 + a_norms))))
    xi_d = max(1.0, np.sqrt(n), (float(np.linalg.norm(cost)) + float(a_norms.max())) / np.sqrt(n))
    x = xi_p * np.eye(n)
    z = xi_d * np.eye(n)
    y = np.zeros(m)

    def op_a(mat: np.ndarray) -> np.ndarray:
        return np.einsum("kij,ij->k", ops, mat)

    def op_at(vec: np.ndarray) -> np.ndarray:
        return np.einsum("k,kij->ij", vec, ops)

    gram_pinv = np.linalg.pinv(np.einsum("kij,lij->kl", ops, ops), rcond=1e-12)

    def restore_feasibility(x: np.ndarray, rp: np.ndarray) -> np.ndarray:
        """Least-norm affine correction, applied only while the iterate has
        interior margin to absorb it. Once the primal residual is exactly
        zero it stays negligible, which keeps the duality-gap measure free
        of the y^T rp contamination that otherwise blocks convergence on
        degenerate instances."""
        dx = _sym(op_at(gram_pinv @ rp))
        x_min = float(np.linalg.eigvalsh(x).min())
        if x_min <= 0:
            return x
        if float(np.linalg.eigvalsh(x + dx).min()) >= 0.25 * x_min:
            return _sym(x + dx)
        return x

    b_scale = 1.0 + float(np.abs(b).max(initial=0.0))
    c_scale = 1.0 + float(np.abs(cost).max(initial=0.0))
    target = 0.1 * feas_tol

    def converged(rp, rd, pobj, dobj, tol):
        pinf_abs = float(np.abs(rp).max(initial=0.0))
        pinf = pinf_abs / b_scale
        dinf = float(np.abs(rd).max(initial=0.0)) / c_scale
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        ok = (pinf <= tol and dinf <= tol and gap <= tol
              and pinf_abs <= 0.5 * feas_tol)
        return ok, pinf, dinf, gap

    status = STATUS_NUMERICAL_LIMIT
    message = ""
    dinf = np.inf
    it = 0
    stalls = 0
    best_mu = np.inf
    best_gap = np.inf
    for it in range(1, max_iter + 1):
        rp = b - op_a(x)
        pinf_abs = float(np.abs(rp).max(initial=0.0))
        if 0.0 < pinf_abs <= 1e-5 * b_scale:
            x = restore_feasibility(x, rp)
            rp = b - op_a(x)
        rd = cost - z - op_at(y)
        mu = float(np.sum(x * z)) / n
        pobj = float(np.sum(cost * x))
        dobj = float(b @ y)
        done, pinf, dinf, gap = converged(rp, rd, pobj, dobj, target)
        if done:
            status = STATUS_OPTIMAL
            break

        # Farkas-style test for a dual improving ray (primal infeasibility).
        ynorm = float(np.linalg.norm(y))
        if dobj > 1.0 and ynorm > 1e4 * b_scale:
            ray = y / dobj
            lam_max = float(np.linalg.eigvalsh(_sym(op_at(ray))).max())
            if lam_max <= 1e-7 * (1.0 + float(a_norms.max())):
                return _IpmResult(x=x, y=ray, status=STATUS_INFEASIBLE, iterations=it,
                                  dual_residual=dinf,
                                  message="dual improving ray found (primal infeasible)")

        w = _nt_scaling(x, z)
        try:
            zinv = np.linalg.inv(z)
        except np.linalg.LinAlgError:
            message = "scaling matrix became singular"
            break
        zinv = _sym(zinv)

        waw = np.einsum("ab,kbc,cd->kad", w, ops, w)
        schur = np.einsum("kij,lij->kl", ops, waw)
        schur = _sym(schur)
        w_rd_w = _sym(w @ rd @ w)
        try:
            chol = scipy.linalg.cho_factor(schur + 1e-13 * np.trace(schur) / m * np.eye(m))

            def schur_solve(rhs):
                dy = scipy.linalg.cho_solve(chol, rhs)
                dy += scipy.linalg.cho_solve(chol, rhs - schur @ dy)  # one refinement
                return dy
        except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):

            def schur_solve(rhs):
                return np.linalg.lstsq(schur, rhs, rcond=None)[0]

        def newton(rc: np.ndarray):
            rhs = rp - op_a(rc) + op_a(w_rd_w)
            dy = schur_solve(rhs)
            dz = rd - op_at(dy)
            dx = _sym(rc - w @ dz @ w)
            return dx, dy, dz

        # predictor: affine step fixes the centering weight
        dx_a, dy_a, dz_a = newton(-x)
        ap = min(1.0, 0.98 * _max_step(x, dx_a))
        ad = min(1.0, 0.98 * _max_step(z, dz_a))
        mu_aff = float(np.sum((x + ap * dx_a) * (z + ad * dz_a))) / n
        sigma = min(1.0, max(1e-8, (max(mu_aff, 0.0) / mu) ** 3))

        dx, dy, dz = newton(sigma * mu * zinv - x)
        ap = min(1.0, 0.98 * _max_step(x, dx))
        ad = min(1.0, 0.98 * _max_step(z, dz))
        if min(ap, ad) < 0.05:
            # drifting off the central path: take a centering step instead
            sigma = max(sigma, 0.5)
            dx, dy, dz = newton(sigma * mu * zinv - x)
            ap = min(1.0, 0.98 * _max_step(x, dx))
            ad = min(1.0, 0.98 * _max_step(z, dz))
        x = _sym(x + ap * dx)
        y = y + ad * dy
        z = _sym(z + ad * dz)
        # stagnation: no meaningful progress on mu or the gap for a while
        if mu < best_mu * 0.99 or gap < best_gap * 0.99:
            stalls = 0
        else:
            stalls += 1
            if stalls >= 8:
                message = "progress stalled"
                break
        best_mu = min(best_mu, mu)
        best_gap = min(best_gap, gap)
        if mu < 1e-15:
            break
    # Polish: alternate least-norm affine corrections with PSD clipping and
    # keep the best iterate. On degenerate instances (no strictly feasible
    # point) the path-following residuals bottom out with a residual whose
    # product with the large dual multipliers poisons the gap measure;
    # restoring exact feasibility removes that term.
    def score(mat: np.ndarray) -> float:
        pres = float(np.abs(b - op_a(mat)).max(initial=0.0))
        neg = max(0.0, -float(np.linalg.eigvalsh(mat).min()))
        return max(pres / max(feas_tol, 1e-300), neg / max(psd_tol, 1e-300))

    best_x = x
    best_score = score(x)
    if best_score > 0.0:
        cand = x.copy()
        for _ in range(30):
            cand = _sym(cand + op_at(gram_pinv @ (b - op_a(cand))))
            w_c, v_c = np.linalg.eigh(cand)
            if w_c.min() < 0.0:
                cand = _sym(v_c @ np.diag(np.clip(w_c, 0.0, None)) @ v_c.T)
            sc = score(cand)
            if sc < best_score:
                best_score = sc
                best_x = cand
            if sc <= 0.25:
                break
        # end on the affine projection so the constraints bind exactly
        cand = _sym(best_x + op_at(gram_pinv @ (b - op_a(best_x))))
        if score(cand) < best_score:
            best_x = cand
    x = best_x

    if status != STATUS_OPTIMAL:
        message = message or "iteration limit reached"
    rp = b - op_a(x)
    rd = cost - z - op_at(y)
    pobj = float(np.sum(cost * x))
    dobj = float(b @ y)
    done, pinf, dinf, gap = converged(rp, rd, pobj, dobj, feas_tol)
    if done:
        status = STATUS_OPTIMAL
        message = ""
    return _IpmResult(x=x, y=y, status=status, iterations=it, dual_residual=dinf,
                      message=message)


# ----------------------------------------------------------------------
# Solving on a caller-supplied face
# ----------------------------------------------------------------------

def _solve_on_face(problem: SdpProblem, v: np.ndarray, max_iter: int,
                   feas_tol: float, psd_tol: float) -> SdpSolution:
    n = problem.n
    if v.ndim != 2 or v.shape[0] != n:
        raise ValueError(f"face isometry must be {n} x n', got {v.shape}")
    n_red = v.shape[1]
    if n_red and linops.max_abs(linops.dagger(v) @ v - np.eye(n_red)) > 1e-10:
        raise ValueError("face columns must be orthonormal")
    b_c = np.asarray(problem.constraint_vals, dtype=float)
    if n_red == 0:
        # the face is trivial: X = 0 is the only candidate
        pres = float(np.abs(b_c).max(initial=0.0))
        ok = pres <= feas_tol
        return SdpSolution(
            x=np.zeros((n, n), dtype=complex),
            objective_value=0.0 if ok else np.nan,
            primal_residual=pres, dual_residual=0.0,
            status=STATUS_OPTIMAL if ok else STATUS_INFEASIBLE,
            iterations=0, rank=0,
            message="variable restricted to the zero face",
        )
    reduced = SdpProblem(
        n=n_red,
        objective=np.conj(linops.dagger(v) @ np.conj(problem.objective) @ v),
        constraint_ops=tuple(hermitize(linops.dagger(v) @ a @ v) for a in problem.constraint_ops),
        constraint_vals=problem.constraint_vals,
    )
    sol = solve(reduced, max_iter=max_iter, feas_tol=feas_tol, psd_tol=psd_tol)
    x = hermitize(v @ sol.x @ linops.dagger(v))
    if sol.status == STATUS_INFEASIBLE:
        return SdpSolution(
            x=np.zeros((n, n), dtype=complex), objective_value=np.nan,
            primal_residual=np.inf, dual_residual=sol.dual_residual,
            status=STATUS_INFEASIBLE, iterations=sol.iterations, y=sol.y,
            infeasibility_certificate=sol.infeasibility_certificate,
            message=(sol.message + " (on the restricted support)").strip(),
        )
    cost_c = np.conj(problem.objective)
    primal_res = max(
        abs(float(np.trace(a @ x).real) - bv)
        for a, bv in zip(problem.constraint_ops, b_c)
    )
    eigs = np.linalg.eigvalsh(x)
    status = sol.status
    if status == STATUS_OPTIMAL and (primal_res > feas_tol or eigs.min() < -psd_tol):
        status = STATUS_NUMERICAL_LIMIT
    return SdpSolution(
        x=x, objective_value=float(np.trace(cost_c @ x).real),
        primal_residual=primal_res, dual_residual=sol.dual_residual,
        status=status, iterations=sol.iterations, y=sol.y,
        rank=int(np.sum(eigs > max(psd_tol, 1e-8 * float(eigs.max(initial=0.0))))),
        message=sol.message,
    )


# ----------------------------------------------------------------------
# Facial-reduction retry
# ----------------------------------------------------------------------

def _retry_on_face(first: _IpmResult, cost: np.ndarray, ops: np.ndarray,
                   b: np.ndarray, max_iter: int, feas_tol: float,
                   psd_tol: float) -> _IpmResult:
    """Re-solve on the face spanned by the large eigenvectors of the first
    iterate and adopt the embedded result when it is certified.

    When no strictly feasible point exists (the constraints force the
    variable onto a face of the PSD cone) the path-following iterates
    cannot reach interior-grade accuracy. The face is visible in the first
    pass's eigenvalue split; restricting every operator to it restores a
    well-posed problem. The embedded solution is accepted only when it is
    feasible for the full problem and its objective agrees with the first
    pass's dual bound (weak duality certifies near-optimality).
    """
    w, v = np.linalg.eigh(first.x)
    w_max = max(float(w.max(initial=0.0)), 1e-300)
    dobj = float(b @ first.y)
    for cut in (1e-7, 1e-5, 1e-3):
        sel = w > cut * w_max
        n_red = int(np.sum(sel))
        if n_red == 0 or n_red == len(w):
            continue
        basis = v[:, sel]
        ops_red = np.einsum("ia,kij,jb->kab", basis, ops, basis)
        cost_red = basis.T @ cost @ basis
        rows_red = ops_red.reshape(len(ops_red), -1)
        _, sv_red, _ = np.linalg.svd(rows_red, full_matrices=True)
        rank_red = int(np.sum(sv_red > max(1e-12, 1e-10 * (sv_red[0] if sv_red.size else 0.0))))
        if rank_red < len(ops_red):
            _, _, piv = scipy.linalg.qr(rows_red.T, pivoting=True, mode="economic")
            keep_red = np.sort(piv[:rank_red])
            # dropped rows must remain consistent on the face
            trial = _solve_real_sdp(cost_red, ops_red[keep_red], b[keep_red],
                                    max_iter, feas_tol, psd_tol)
        else:
            trial = _solve_real_sdp(cost_red, ops_red, b, max_iter, feas_tol, psd_tol)
        if trial.status != STATUS_OPTIMAL:
            continue
        embedded = _sym(basis @ trial.x @ basis.T)
        pres = float(np.abs(b - np.einsum("kij,ij->k", ops, embedded)).max(initial=0.0))
        pobj = float(np.sum(cost * embedded))
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        if pres <= 0.5 * feas_tol and gap <= feas_tol:
            return _IpmResult(x=embedded, y=first.y, status=STATUS_OPTIMAL,
                              iterations=first.iterations + trial.iterations,
                              dual_residual=first.dual_residual,
                              message="solved on the active face")
    return first


# ----------------------------------------------------------------------
# Public solve
# ----------------------------------------------------------------------

def solve(problem: SdpProblem, max_iter: int = MAX_ITER, feas_tol: float = FEAS_TOL,
          psd_tol: float = PSD_TOL, face: np.ndarray | None = None,
          backend: Callable[..., SdpSolution] | None = None) -> SdpSolution:
    """Solve the SDP; see the module docstring for the method.

    ``face`` optionally restricts the variable to a known support: an
    isometry V (n x n', orthonormal columns) with X = V X' V^dag. Callers
    use it when the constraints provably force X onto a face of the PSD
    cone (no strictly feasible point exists there, which starves interior
    methods); the restricted problem regains an interior. The returned
    solution is embedded back and all residuals refer to the full problem.

    The reported primal_residual is the max absolute constraint violation
    over the problem's full (pre-reduction) constraint set.
    """
    if backend is not None:
        return backend(problem, max_iter=max_iter, feas_tol=feas_tol, psd_tol=psd_tol)

    if face is not None:
        return _solve_on_face(problem, np.asarray(face, dtype=complex),
                              max_iter, feas_tol, psd_tol)

    n = problem.n
    ops_c = list(problem.constraint_ops)
    b_c = np.asarray(problem.constraint_vals, dtype=float)
    cost_c = np.conj(problem.objective)  # F0^T == conj(F0) for Hermitian F0

    is_real = (
        linops.max_abs(problem.objective.imag) == 0.0
        and all(linops.max_abs(a.imag) == 0.0 for a in ops_c)
    )
    if is_real:
        nr = n
        ops_r = np.array([a.real for a in ops_c])
        b_r = b_c.copy()
        cost_r = cost_c.real
    else:
        nr = 2 * n
        ops_r = np.array([_realify(a) for a in ops_c])
        b_r = 2.0 * b_c
        cost_r = _realify(cost_c)

    m = len(ops_c)
    rows = ops_r.reshape(m, -1)

    # Linear consistency and rank reduction of the constraint set.
    u, sv, _ = np.linalg.svd(rows, full_matrices=True)
    smax = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > max(1e-12, 1e-10 * smax)))
    if rank < m:
        null_left = u[:, rank:]
        mismatch = null_left.T @ b_r
        j = int(np.argmax(np.abs(mismatch)))
        if abs(mismatch[j]) > 1e-9 * (1.0 + float(np.abs(b_r).max())):
            cert = null_left[:, j] / mismatch[j]
            if not is_real:
                cert = 2.0 * cert
            return SdpSolution(
                x=np.zeros((n, n), dtype=complex), objective_value=np.nan,
                primal_residual=np.inf, dual_residual=np.inf,
                status=STATUS_INFEASIBLE, iterations=0,
                infeasibility_certificate=cert,
                message="constraints are linearly inconsistent",
            )
        _, _, piv = scipy.linalg.qr(rows.T, pivoting=True, mode="economic")
        keep = np.sort(piv[:rank])
    else:
        keep = np.arange(m)

    res = _solve_real_sdp(cost_r, ops_r[keep], b_r[keep], max_iter, feas_tol, psd_tol)
    if res.status == STATUS_NUMERICAL_LIMIT:
        res = _retry_on_face(res, cost_r, ops_r[keep], b_r[keep],
                             max_iter, feas_tol, psd_tol)

    y_full = np.zeros(m)
    y_full[keep] = res.y
    if not is_real:
        x = _unrealify(res.x, n)
        y_full = 2.0 * y_full
    else:
        x = hermitize(res.x.astype(complex))

    if res.status == STATUS_INFEASIBLE:
        return SdpSolution(
            x=np.zeros((n, n), dtype=complex), objective_value=np.nan,
            primal_residual=np.inf, dual_residual=res.dual_residual,
            status=STATUS_INFEASIBLE, iterations=res.iterations,
            y=y_full, infeasibility_certificate=y_full, message=res.message,
        )

    primal_res = max(
        abs(float(np.trace(a @ x).real) - bv)
        for a, bv in zip(ops_c, b_c)
    )
    eigs = np.linalg.eigvalsh(x)
    x_rank = int(np.sum(eigs > max(psd_tol, 1e-8 * float(eigs.max(initial=0.0)))))
    obj = float(np.trace(cost_c @ x).real)
    status = res.status
    if status == STATUS_OPTIMAL and (primal_res > feas_tol or eigs.min() < -psd_tol):
        status = STATUS_NUMERICAL_LIMIT
    return SdpSolution(
        x=x, objective_value=obj, primal_residual=primal_res,
        dual_residual=res.dual_residual, status=status,
        iterations=res.iterations, y=y_full, rank=x_rank, message=res.message,
    )


# ----------------------------------------------------------------------
# JSON dumps for debugging (sdp solve --dump)
# ----------------------------------------------------------------------

def problem_to_json(p: SdpProblem) -> dict:
    return {
        "n": p.n,
        "objective": linops.matrix_to_json(p.objective),
        "constraints": [
            {"a": linops.matrix_to_json(a), "b": bv}
            for a, bv in zip(p.constraint_ops, p.constraint_vals)
        ],
    }


def problem_from_json(obj: dict) -> SdpProblem:
    if not isinstance(obj, dict):
        raise ValueError("problem JSON must be an object")
    missing = {"n", "objective", "constraints"} - set(obj)
    if missing:
        raise ValueError(f"problem JSON missing keys: {sorted(missing)}")
    cons = obj["constraints"]
    if not isinstance(cons, list) or not cons:
        raise ValueError("constraints must be a non-empty list")
    ops = []
    vals = []
    for c in cons:
        ops.append(linops.matrix_from_json(c["a"]))
        vals.append(float(c["b"]))
    return SdpProblem(
        n=int(obj["n"]),
        objective=linops.matrix_from_json(obj["objective"]),
        constraint_ops=tuple(ops),
        constraint_vals=tuple(vals),
    )


def solution_to_json(s: SdpSolution) -> dict:
    out = {
        "status": s.status,
        "objective_value": None if np.isnan(s.objective_value) else s.objective_value,
        "maximized_value": None if np.isnan(s.objective_value) else -s.objective_value,
        "primal_residual": None if not np.isfinite(s.primal_residual) else s.primal_residual,
        "dual_residual": None if not np.isfinite(s.dual_residual) else s.dual_residual,
        "iterations": s.iterations,
        "rank": s.rank,
        "x": linops.matrix_to_json(s.x),
    }
    if s.y is not None:
        out["y"] = [float(v) for v in s.y]
    if s.infeasibility_certificate is not None:
        out["infeasibility_certificate"] = [float(v) for v in s.infeasibility_certificate]
    if s.message:
        out["message"] = s.message
    return out
