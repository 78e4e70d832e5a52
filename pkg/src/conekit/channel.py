"""Quantum channels in Choi form.

A channel Phi from a d_in- to a d_out-dimensional system is stored as its
Choi matrix on H1 (x) H2 with H1 the output copy (major index) and H2 the
input copy (minor index):

    C = sum_ij Phi(|i><j|) (x) |i><j|,

so the action is recovered as Phi(rho) = tr_H2[C (I (x) rho^T)], complete
positivity is equivalent to C >= 0, and trace preservation to
tr_H1[C] = I on the input space.

A map rho -> sum_a S_a tr[F_a rho] built from operator pairs (S_a, F_a)
therefore has Choi matrix sum_a S_a (x) F_a^T; the separable channel
constructions in :mod:`conekit.engineer` use exactly that form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linops
from .linops import (
    HERM_TOL,
    PSD_TOL,
    hermitize,
    kron,
    matrix_from_json,
    matrix_to_json,
    partial_trace,
    trace_distance,
)

TP_TOL = 1e-9
FP_TOL = 1e-8
# iteration is declared converged when consecutive states agree to this level
ITER_CONV_TOL = 1e-10


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi matrix of a linear map, output-major / input-minor ordering."""

    d_in: int
    d_out: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.d_in < 1 or self.d_out < 1:
            raise ValueError("channel dimensions must be positive")
        m = linops.check_hermitian(self.matrix, tol=1e-6)
        n = self.d_out * self.d_in
        if m.shape != (n, n):
            raise ValueError(
                f"Choi matrix shape {m.shape} does not match d_out*d_in = {n}"
            )
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class CptpReport:
    cp: bool
    tp: bool
    min_eig: float
    tp_residual: float


@dataclass
class FixedPointSet:
    """Fixed states of a channel plus spectral metadata.

    states are unit-trace PSD fixed points; eigenvalue_residuals[i] is the
    trace distance between Phi(states[i]) and states[i]; peripheral_spectrum
    lists the superoperator eigenvalues of modulus within tolerance of 1
    (zero-trace fixed directions show up here but yield no state).
    """

    states: list[np.ndarray]
    eigenvalue_residuals: list[float]
    peripheral_spectrum: list[complex] = field(default_factory=list)


# ----------------------------------------------------------------------
# Constructors
# ----------------------------------------------------------------------

def choi_from_map(phi, d_in: int, d_out: int) -> ChoiMatrix:
    """Assemble the Choi matrix of a callable rho -> Phi(rho)."""
    c = np.zeros((d_out * d_in, d_out * d_in), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            e_ij = np.zeros((d_in, d_in), dtype=complex)
            e_ij[i, j] = 1.0
            c += kron(np.asarray(phi(e_ij), dtype=complex), e_ij)
    return ChoiMatrix(d_in, d_out, hermitize(c))


def identity_channel(dim: int) -> ChoiMatrix:
    return choi_from_map(lambda rho: rho, dim, dim)


def unitary_channel(u) -> ChoiMatrix:
    u = linops.as_matrix(u)
    if linops.max_abs(u @ linops.dagger(u) - np.eye(u.shape[0])) > 1e-9:
        raise ValueError("unitary_channel requires a unitary matrix")
    return choi_from_map(lambda rho: u @ rho @ linops.dagger(u), u.shape[0], u.shape[0])


def depolarizing_channel(dim: int, strength: float) -> ChoiMatrix:
    """rho -> (1-p) rho + p tr[rho] I/dim."""
    if not 0.0 <= strength <= 1.0:
        raise ValueError("depolarizing strength must lie in [0, 1]")
    eye = np.eye(dim, dtype=complex)
    return choi_from_map(
        lambda rho: (1 - strength) * rho + strength * np.trace(rho) * eye / dim,
        dim,
        dim,
    )


def random_cptp_choi(dim: int, rng: np.random.Generator) -> ChoiMatrix:
    """Sample a random CPTP Choi matrix (PSD Ginibre, then TP normalization)."""
    n = dim * dim
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    raw = g @ linops.dagger(g)
    red = partial_trace(raw, (dim, dim), over=1)
    w, v = np.linalg.eigh(hermitize(red))
    inv_sqrt = v @ np.diag(1.0 / np.sqrt(np.clip(w, 1e-12, None))) @ linops.dagger(v)
    factor = kron(np.eye(dim), inv_sqrt)
    return ChoiMatrix(dim, dim, hermitize(factor @ raw @ factor))


# ----------------------------------------------------------------------
# Channel action and structural checks
# ----------------------------------------------------------------------

def apply(c: ChoiMatrix, rho) -> np.ndarray:
    """Phi(rho) = tr_H2[C (I (x) rho^T)]."""
    rho = linops.as_matrix(rho)
    if rho.shape != (c.d_in, c.d_in):
        raise ValueError(
            f"state dimension {rho.shape} does not match channel input {c.d_in}"
        )
    prod = c.matrix @ kron(np.eye(c.d_out, dtype=complex), rho.T)
    return partial_trace(prod, (c.d_out, c.d_in), over=2)


def is_cptp(c: ChoiMatrix, psd_tol: float = PSD_TOL, tp_tol: float = TP_TOL) -> CptpReport:
    min_eig = float(np.linalg.eigvalsh(hermitize(c.matrix)).min())
    reduced = partial_trace(c.matrix, (c.d_out, c.d_in), over=1)
    tp_residual = linops.max_abs(reduced - np.eye(c.d_in))
    return CptpReport(
        cp=min_eig >= -psd_tol,
        tp=tp_residual <= tp_tol,
        min_eig=min_eig,
        tp_residual=tp_residual,
    )


def superoperator(c: ChoiMatrix) -> np.ndarray:
    """Matrix S with S @ vec(rho) = vec(Phi(rho)), vec = row-major flatten.

    Entrywise Phi(rho)_{ab} = sum_{jk} C[(a,j),(b,k)] rho_{jk}, so S is a
    reshuffle of the Choi matrix.
    """
    if c.d_in != c.d_out:
        raise ValueError("superoperator requires a square channel (d_in == d_out)")
    d = c.d_in
    t = c.matrix.reshape(d, d, d, d)  # indices (a, j, b, k)
    return t.transpose(0, 2, 1, 3).reshape(d * d, d * d).copy()


def iterate(c: ChoiMatrix, rho0, n: int, stop_tol: float | None = None) -> list[np.ndarray]:
    """Apply the channel repeatedly: [Phi(rho0), Phi^2(rho0), ...].

    Returns n states, or fewer if stop_tol is given and two consecutive
    iterates come within that trace distance.
    """
    if n < 1:
        raise ValueError("iteration count must be >= 1")
    rep = is_cptp(c)
    if not (rep.cp and rep.tp):
        raise ValueError(
            f"iterate requires a CPTP channel (min_eig={rep.min_eig:.3e}, "
            f"tp_residual={rep.tp_residual:.3e})"
        )
    state = linops.check_density(rho0, tol=1e-6)
    out: list[np.ndarray] = []
    for _ in range(n):
        nxt = hermitize(apply(c, state))
        out.append(nxt)
        if stop_tol is not None and trace_distance(nxt, state) <= stop_tol:
            break
        state = nxt
    return out


# ----------------------------------------------------------------------
# Fixed-point extraction
# ----------------------------------------------------------------------

def _hermitian_fixed_basis(null_vecs: np.ndarray, d: int) -> list[np.ndarray]:
    """Real-orthonormal Hermitian basis of the fixed subspace.

    The fixed subspace of a CPTP map is closed under M -> M^dag, so the
    Hermitian parts of a complex basis span a real space of the same
    dimension.
    """
    m = null_vecs.shape[1]
    rows = []
    for k in range(m):
        mat = null_vecs[:, k].reshape(d, d)
        for h in (hermitize(mat), hermitize(-1j * mat)):
            rows.append(np.concatenate([h.real.reshape(-1), h.imag.reshape(-1)]))
    stack = np.asarray(rows)
    u, s, vt = np.linalg.svd(stack, full_matrices=False)
    keep = s > 1e-8 * max(1.0, s[0])
    basis = []
    for row in vt[keep]:
        re, im = row[: d * d].reshape(d, d), row[d * d :].reshape(d, d)
        basis.append(hermitize(re + 1j * im))
    return basis


def _reference_fixed_state(c: ChoiMatrix, s: np.ndarray, fp_tol: float) -> np.ndarray:
    """A maximal-support fixed state: spectral projection of I/d onto the
    eigenvalue-1 eigenspace (the Cesaro limit of Phi^k(I/d))."""
    d = c.d_in
    evals, evecs = np.linalg.eig(s)
    sel = np.abs(evals - 1.0) <= max(fp_tol, 1e-9)
    if not np.any(sel):
        sel = np.abs(evals - 1.0) <= 1e-6
    proj = evecs[:, sel] @ np.linalg.pinv(evecs)[sel, :]
    vec = proj @ (np.eye(d, dtype=complex) / d).reshape(-1)
    rho = hermitize(vec.reshape(d, d))
    tr = np.trace(rho).real
    if abs(tr) > 1e-12:
        rho = rho / tr
    if trace_distance(hermitize(apply(c, rho)), rho) > 10 * fp_tol:
        # ill-conditioned eigenbasis: fall back to a Cesaro average
        acc = np.zeros((d, d), dtype=complex)
        state = np.eye(d, dtype=complex) / d
        for _ in range(20000):
            state = hermitize(apply(c, state))
            acc += state
        rho = acc / np.trace(acc).real
    return rho


def _candidate_key(rho: np.ndarray) -> tuple:
    flat = np.concatenate(
        [np.diag(rho).real, rho.real.reshape(-1), rho.imag.reshape(-1)]
    )
    return tuple(np.round(-flat, 9))


def fixed_points(c: ChoiMatrix, fp_tol: float = FP_TOL) -> FixedPointSet:
    """Extract fixed states of a CPTP channel.

    The eigenvalue-1 subspace of the superoperator is computed via SVD,
    Hermitized, and probed with generic Hermitian elements: eigenprojectors
    of a generic fixed element, compressed against a maximal-support fixed
    state, recover the extremal fixed states whenever the fixed set is a
    simplex over distinguishable sectors (the engineered-channel case).
    Candidates failing the fixed-point residual are dropped; the
    maximal-support state is the fallback, so the result is never empty.
    """
    rep = is_cptp(c)
    if not (rep.cp and rep.tp):
        raise ValueError(
            f"fixed_points requires a CPTP channel (min_eig={rep.min_eig:.3e}, "
            f"tp_residual={rep.tp_residual:.3e})"
        )
    d = c.d_in
    s = superoperator(c)
    evals = np.linalg.eigvals(s)
    peripheral = [complex(z) for z in evals[np.abs(np.abs(evals) - 1.0) <= max(fp_tol, 1e-9)]]
    peripheral.sort(key=lambda z: (-abs(z), np.angle(z)))

    _, sv, vh = np.linalg.svd(s - np.eye(d * d))
    null_mask = sv <= max(fp_tol, 1e-11)
    if not np.any(null_mask):
        null_mask = sv <= sv.min() * (1 + 1e-9)
    null_vecs = vh[null_mask].conj().T
    basis = _hermitian_fixed_basis(null_vecs, d)
    m = len(basis)

    rho_ref = _reference_fixed_state(c, s, fp_tol)

    def residual(rho: np.ndarray) -> float:
        return trace_distance(hermitize(apply(c, rho)), rho)

    def probe(gen: np.ndarray) -> list[np.ndarray]:
        found = []
        w, v = np.linalg.eigh(gen)
        gap_tol = 1e-7 * max(1.0, float(np.abs(w).max()))
        i = 0
        while i < len(w):
            j = i
            while j + 1 < len(w) and abs(w[j + 1] - w[j]) <= gap_tol:
                j += 1
            cols = v[:, i : j + 1]
            proj = cols @ linops.dagger(cols)
            compressed = hermitize(proj @ rho_ref @ proj)
            tr = np.trace(compressed).real
            if tr > 1e-9:
                cand = compressed / tr
                if residual(cand) <= fp_tol:
                    found.append(cand)
            i = j + 1
        return found

    candidates: list[np.ndarray] = []
    if m == 1:
        candidates.append(rho_ref)
    else:
        rng = np.random.default_rng(12345)  # fixed seed: extraction is deterministic
        for _ in range(3):
            coeff = rng.standard_normal(m)
            candidates = probe(sum(ck * hk for ck, hk in zip(coeff, basis)))
            if candidates:
                break

    states: list[np.ndarray] = []
    keys: set[tuple] = set()
    for cand in candidates:
        if residual(cand) > fp_tol:
            continue
        if any(trace_distance(cand, st) < 1e-7 for st in states):
            continue
        key = _candidate_key(cand)
        if key in keys:
            continue
        keys.add(key)
        states.append(cand)
    if not states:
        states.append(rho_ref)
    states.sort(key=_candidate_key)
    residuals = [residual(st) for st in states]
    return FixedPointSet(states=states, eigenvalue_residuals=residuals, peripheral_spectrum=peripheral)


# ----------------------------------------------------------------------
# JSON wire format: matrix JSON extended with {"d_in", "d_out"}.
# ----------------------------------------------------------------------

def choi_to_json(c: ChoiMatrix) -> dict:
    obj = matrix_to_json(c.matrix)
    obj["d_in"] = c.d_in
    obj["d_out"] = c.d_out
    return obj


def choi_from_json(obj: dict) -> ChoiMatrix:
    if not isinstance(obj, dict) or "d_in" not in obj or "d_out" not in obj:
        raise ValueError("Choi JSON must contain d_in and d_out")
    return ChoiMatrix(int(obj["d_in"]), int(obj["d_out"]), matrix_from_json(obj))
