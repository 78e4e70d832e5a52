"""Constructive design of channels with prescribed fixed points.

Three routes, all emitting Choi matrices in the convention of
:mod:`conekit.channel`:

* a closed form for a single fixed state sigma, built from its top
  eigenpair and a free decay state B;
* a separable construction for several states that can be unambiguously
  discriminated, built from annihilating projectors;
* a semidefinite program that finds a minimum-trace PSD operator fixing
  all requested states, completed to a trace-preserving channel by B.

The closed forms guarantee the fixed points identically; complete
positivity depends on the inputs and is checked on the assembled Choi
matrix rather than factor by factor (some factors are indefinite by
design). Validity reports carry every condition with its numeric
residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel as chan
from . import linops
from . import sdp as sdpmod
from .channel import ChoiMatrix, CptpReport
from .linops import RANK_TOL, hermitize, kron, trace_distance


class ConstructionError(ValueError):
    """A construction precondition failed.

    ``reason`` is a stable machine-readable tag; ``details`` holds the
    numeric evidence.
    """

    def __init__(self, message: str, reason: str = "", details: dict | None = None):
        super().__init__(message)
        self.reason = reason or "construction-error"
        self.details = details or {}


# ----------------------------------------------------------------------
# Single fixed point, closed form
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SingleFixedPointSpec:
    """Inputs for the single-fixed-point construction.

    lambda_max / v_max are the top eigenpair of sigma (deterministic
    tie-break from linops.herm_eig). The construction requires
    <v_max|B|v_max> <= lambda_max; it is completely positive iff
    sigma - (1 - lambda_max) B >= 0.
    """

    sigma: np.ndarray
    b: np.ndarray
    lambda_max: float
    v_max: np.ndarray

    @classmethod
    def from_states(cls, sigma, b) -> "SingleFixedPointSpec":
        sigma = linops.check_density(sigma)
        b = linops.check_density(b)
        if b.shape != sigma.shape:
            raise ValueError("sigma and B must have equal dimensions")
        w, v = linops.herm_eig(sigma)
        return cls(sigma=sigma, b=b, lambda_max=float(w[0]), v_max=v[:, 0].copy())


def build_single_fixed_point(spec: SingleFixedPointSpec, validate: bool = True) -> ChoiMatrix:
    """Choi matrix sigma (x) P^T / lambda + B (x) (I - P^T / lambda) with
    P the projector onto the top eigenvector of sigma.

    With validate=True the overlap condition <v|B|v> <= lambda_max is
    enforced (a ConstructionError names the inequality); the returned
    channel fixes sigma identically either way.
    """
    d = spec.sigma.shape[0]
    overlap = float(np.real(np.conj(spec.v_max) @ spec.b @ spec.v_max))
    if validate and overlap > spec.lambda_max + 1e-9:
        raise ConstructionError(
            f"decay state overlaps the top eigenvector too strongly: "
            f"<v_max|B|v_max> = {overlap:.12g} > lambda_max = {spec.lambda_max:.12g}",
            reason="overlap-exceeds-lambda-max",
            details={"overlap": overlap, "lambda_max": spec.lambda_max},
        )
    proj_t = linops.ket_projector(spec.v_max).T
    rest = np.eye(d, dtype=complex) - proj_t / spec.lambda_max
    c = kron(spec.sigma, proj_t / spec.lambda_max) + kron(spec.b, rest)
    return ChoiMatrix(d, d, hermitize(c))


def single_fixed_point_report(spec: SingleFixedPointSpec) -> dict:
    """Every validity condition of the single-fixed-point construction
    with its numeric residual, computed on the assembled channel."""
    overlap = float(np.real(np.conj(spec.v_max) @ spec.b @ spec.v_max))
    cp_factor = spec.sigma - (1.0 - spec.lambda_max) * spec.b
    c = build_single_fixed_point(spec, validate=False)
    rep = chan.is_cptp(c)
    return {
        "lambda_max": spec.lambda_max,
        "vmax_overlap": overlap,
        "overlap_margin": spec.lambda_max - overlap,
        "cp_factor_min_eig": float(np.linalg.eigvalsh(hermitize(cp_factor)).min()),
        "choi_min_eig": rep.min_eig,
        "tp_residual": rep.tp_residual,
        "cp": rep.cp,
        "tp": rep.tp,
        "fixed_point_residual": trace_distance(chan.apply(c, spec.sigma), spec.sigma),
    }


# ----------------------------------------------------------------------
# Unambiguous-discrimination projectors
# ----------------------------------------------------------------------

@dataclass
class DiscriminationReport:
    """Outcome of the annihilating-projector search.

    kernel_projectors[i] projects onto the intersection of the kernels of
    all other states; projectors[i] is its restriction to the support of
    sigma_i (zero when the state never enters that kernel). overlaps[i] is
    tr[Pi_i sigma_i]; the search is infeasible when any overlap vanishes,
    and failing_index records the first such state.
    """

    feasible: bool
    projectors: list[np.ndarray]
    overlaps: list[float]
    kernel_projectors: list[np.ndarray]
    kernel_overlaps: list[float]
    kernel_ranks: list[int]
    failing_index: int | None = None


def _kernel_intersection(states: list[np.ndarray], skip: int, rank_tol: float) -> np.ndarray:
    """Projector onto the intersection of ker(sigma_j) over j != skip.

    For PSD operators the intersection of kernels equals the kernel of the
    sum. An empty intersection set (single state) yields the identity.
    """
    d = states[0].shape[0]
    total = np.zeros((d, d), dtype=complex)
    count = 0
    for j, s in enumerate(states):
        if j != skip:
            total += s
            count += 1
    if count == 0:
        return np.eye(d, dtype=complex)
    return linops.kernel_projector(total / count, rank_tol=rank_tol)


def find_discrimination_projectors(sigmas, rank_tol: float = RANK_TOL) -> DiscriminationReport:
    """Search for PSD operators Pi_i with tr[Pi_i sigma_j] = 0 for j != i
    and tr[Pi_i sigma_i] > 0 (zero-error detection of each state)."""
    states = [linops.check_density(s) for s in sigmas]
    if len(states) < 2:
        raise ValueError("need at least two states to discriminate")
    d = states[0].shape[0]
    for s in states:
        if s.shape != (d, d):
            raise ValueError("states must share one dimension")

    projectors, overlaps, kernels, kernel_overlaps, kernel_ranks = [], [], [], [], []
    failing = None
    for i, sigma in enumerate(states):
        k = _kernel_intersection(states, i, rank_tol)
        compressed = hermitize(k @ sigma @ k)
        if linops.max_abs(compressed) > rank_tol:
            pi = linops.support_projector(compressed, rank_tol=rank_tol, psd_tol=1e-7)
        else:
            pi = np.zeros((d, d), dtype=complex)
        ov = float(np.trace(pi @ sigma).real)
        projectors.append(pi)
        overlaps.append(ov)
        kernels.append(k)
        kernel_overlaps.append(float(np.trace(k @ sigma).real))
        kernel_ranks.append(int(round(np.trace(k).real)))
        if ov <= rank_tol and failing is None:
            failing = i
    return DiscriminationReport(
        feasible=failing is None,
        projectors=projectors,
        overlaps=overlaps,
        kernel_projectors=kernels,
        kernel_overlaps=kernel_overlaps,
        kernel_ranks=kernel_ranks,
        failing_index=failing,
    )


# ----------------------------------------------------------------------
# Separable multi-fixed-point construction
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SeparableMultiSpec:
    """States, their annihilating projectors, and the decay state B.

    convergence_margin is 1 minus the B-weight sum tr[B Pi_i]/tr[Pi_i sigma_i];
    when the residual operator vanishes (degenerate case) B never acts and
    the margin is reported as 0 with degenerate=True.
    """

    sigmas: tuple[np.ndarray, ...]
    projectors: tuple[np.ndarray, ...]
    b: np.ndarray
    convergence_margin: float
    degenerate: bool

    @classmethod
    def from_parts(cls, sigmas, projectors, b=None, rank_tol: float = RANK_TOL) -> "SeparableMultiSpec":
        states = tuple(linops.check_density(s) for s in sigmas)
        if not states:
            raise ValueError("need at least one state")
        d = states[0].shape[0]
        projs = tuple(linops.check_hermitian(p) for p in projectors)
        if len(projs) != len(states):
            raise ValueError("one projector per state required")
        b = np.eye(d, dtype=complex) / d if b is None else linops.check_density(b)
        overlaps = [float(np.trace(p @ s).real) for p, s in zip(projs, states)]
        resid = np.eye(d, dtype=complex)
        weight = 0.0
        for p, ov in zip(projs, overlaps):
            if abs(ov) > rank_tol:
                resid = resid - p.T / ov
                weight += float(np.trace(b @ p).real) / ov
        degenerate = linops.max_abs(resid) <= 1e-9
        return cls(sigmas=states, projectors=projs, b=b,
                   convergence_margin=1.0 - weight, degenerate=degenerate)

    @classmethod
    def from_states(cls, sigmas, b=None, rank_tol: float = RANK_TOL) -> "SeparableMultiSpec":
        """Derive projectors via the kernel-intersection search."""
        states = [linops.check_density(s) for s in sigmas]
        if len(states) == 1:
            pi = linops.support_projector(states[0], rank_tol=rank_tol)
            return cls.from_parts(states, [pi], b=b, rank_tol=rank_tol)
        report = find_discrimination_projectors(states, rank_tol=rank_tol)
        if not report.feasible:
            i = report.failing_index
            raise ConstructionError(
                f"states cannot be unambiguously discriminated: "
                f"tr[Pi_{i} sigma_{i}] = {report.overlaps[i]:.3e} "
                f"(kernel-intersection rank {report.kernel_ranks[i]})",
                reason="not-unambiguously-discriminable",
                details={
                    "failing_index": i,
                    "overlaps": report.overlaps,
                    "kernel_overlaps": report.kernel_overlaps,
                    "kernel_ranks": report.kernel_ranks,
                },
            )
        return cls.from_parts(states, report.projectors, b=b, rank_tol=rank_tol)


def separable_condition_report(spec: SeparableMultiSpec) -> dict:
    """The three separability conditions with numeric residuals, plus the
    assembled channel's CP/TP data."""
    k = len(spec.sigmas)
    cross = [
        [float(np.trace(spec.sigmas[i] @ spec.projectors[j]).real) for j in range(k)]
        for i in range(k)
    ]
    overlaps = [cross[i][i] for i in range(k)]
    max_cross = max(
        (abs(cross[i][j]) for i in range(k) for j in range(k) if i != j),
        default=0.0,
    )
    c = build_separable_multi(spec, validate=False)
    rep = chan.is_cptp(c)
    return {
        "cross_overlaps": cross,
        "max_cross_overlap": max_cross,
        "overlaps": overlaps,
        "b_weight": 1.0 - spec.convergence_margin,
        "convergence_margin": spec.convergence_margin,
        "degenerate_residual": spec.degenerate,
        "choi_min_eig": rep.min_eig,
        "tp_residual": rep.tp_residual,
        "cp": rep.cp,
        "tp": rep.tp,
        "fixed_point_residuals": [
            trace_distance(chan.apply(c, s), s) for s in spec.sigmas
        ],
    }


def _validate_separable(spec: SeparableMultiSpec, rank_tol: float) -> None:
    k = len(spec.sigmas)
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            cross = abs(float(np.trace(spec.sigmas[i] @ spec.projectors[j]).real))
            if cross > rank_tol:
                raise ConstructionError(
                    f"condition 1 (annihilation) failed: tr[sigma_{i} Pi_{j}] = {cross:.3e} != 0",
                    reason="cross-overlap-nonzero",
                    details={"i": i, "j": j, "value": cross},
                )
    for i in range(k):
        ov = float(np.trace(spec.projectors[i] @ spec.sigmas[i]).real)
        if ov <= rank_tol:
            raise ConstructionError(
                f"condition 2 (detection) failed: tr[Pi_{i} sigma_{i}] = {ov:.3e} not > 0",
                reason="zero-detection-overlap",
                details={"i": i, "value": ov},
            )
    if not spec.degenerate and spec.convergence_margin <= 0.0:
        raise ConstructionError(
            f"condition 3 (decay weight) failed: sum tr[B Pi_i]/tr[Pi_i sigma_i] = "
            f"{1.0 - spec.convergence_margin:.12g} not < 1",
            reason="decay-weight-too-large",
            details={"b_weight": 1.0 - spec.convergence_margin},
        )


def build_separable_multi(spec: SeparableMultiSpec, validate: bool = True,
                          rank_tol: float = RANK_TOL) -> ChoiMatrix:
    """Choi matrix sum_i sigma_i (x) Pi_i^T / tr[Pi_i sigma_i]
    + B (x) (I - sum_i Pi_i^T / tr[Pi_i sigma_i]).

    Each sigma_i is a fixed point exactly when the cross overlaps vanish;
    with validate=True the three separability conditions are enforced and
    the error names the one that failed.
    """
    if validate:
        _validate_separable(spec, rank_tol)
    d = spec.sigmas[0].shape[0]
    c = np.zeros((d * d, d * d), dtype=complex)
    resid = np.eye(d, dtype=complex)
    for sigma, pi in zip(spec.sigmas, spec.projectors):
        ov = float(np.trace(pi @ sigma).real)
        if abs(ov) <= rank_tol:
            continue
        c += kron(sigma, pi.T) / ov
        resid = resid - pi.T / ov
    c += kron(spec.b, resid)
    return ChoiMatrix(d, d, hermitize(c))


# ----------------------------------------------------------------------
# SDP-backed construction
# ----------------------------------------------------------------------

@dataclass
class SdpChannelResult:
    x: ChoiMatrix
    c: ChoiMatrix
    contraction: float
    contraction_warning: bool
    degenerate: bool           # residual operator vanished; B never acts
    residuals: list[float]
    cptp: CptpReport
    solution: sdpmod.SdpSolution


def build_via_sdp(sigmas, b=None, max_iter: int = sdpmod.MAX_ITER,
                  feas_tol: float = sdpmod.FEAS_TOL) -> SdpChannelResult:
    """Find the minimum-trace PSD operator X fixing every given state,
    then complete it to the trace-preserving channel X + B (x) (I - tr_H1[X]).

    The contraction number tr[X (I (x) B^T)] is reported; values >= 1 set
    contraction_warning (iterating from B's sector may not settle).
    """
    states = [linops.check_density(s) for s in sigmas]
    if not states:
        raise ValueError("need at least one state")
    d = states[0].shape[0]
    b = np.eye(d, dtype=complex) / d if b is None else linops.check_density(b)
    if b.shape != (d, d):
        raise ValueError("decay state dimension mismatch")

    problem = sdpmod.assemble_fixed_point_constraints(states)
    sol = sdpmod.solve(problem, max_iter=max_iter, feas_tol=feas_tol)
    if sol.status == sdpmod.STATUS_INFEASIBLE:
        raise ConstructionError(
            "no PSD operator satisfies the fixed-point constraints"
            + (" (dual certificate attached)" if sol.infeasibility_certificate is not None else ""),
            reason="sdp-infeasible",
            details={
                "certificate": None if sol.infeasibility_certificate is None
                else [float(v) for v in sol.infeasibility_certificate],
                "message": sol.message,
            },
        )
    if sol.status != sdpmod.STATUS_OPTIMAL:
        raise sdpmod.NumericalLimitError(
            f"SDP solve hit its numerical limit: {sol.message or 'no convergence'}"
        )

    x = hermitize(sol.x)
    resid_op = np.eye(d, dtype=complex) - linops.partial_trace(x, (d, d), over=1)
    c_mat = hermitize(x + kron(b, resid_op))
    contraction = float(np.trace(x @ kron(np.eye(d), b.T)).real)
    degenerate = linops.max_abs(resid_op) <= 1e-9
    c = ChoiMatrix(d, d, c_mat)
    return SdpChannelResult(
        x=ChoiMatrix(d, d, x),
        c=c,
        contraction=contraction,
        # tr[X (I (x) B^T)] equals tr[B] = 1 identically once tr_H1[X] = I,
        # so the convergence warning only means something off the degenerate case
        contraction_warning=(not degenerate) and contraction >= 1.0,
        degenerate=degenerate,
        residuals=[trace_distance(chan.apply(c, s), s) for s in states],
        cptp=chan.is_cptp(c),
        solution=sol,
    )
