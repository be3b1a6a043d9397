"""Execute scenario configurations and aggregate their reports."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .config import ScenarioConfig, parse_coeffs, parse_zeros
from .constructive import (
    ROUNDING_ZERO,
    BridgeDirection,
    almost_bridge,
    decompose_many,
    forward_dual_representation,
    sarason_converse_check,
    spanning_samples,
    verify_K_shift_invariance,
)
from .core import BlaschkeProduct, HardyFunction, TruncationConfig, effective_degree
from .errors import ConvergenceError, PreconditionError
from .nearly import (
    CorollaryDirection,
    KernelGram,
    corollary_bridge,
    counterexample_suite,
    inclusion_check,
    kernel_perturbation,
    nearly_converse_check,
    nearly_decompose,
    perturbed_toeplitz_kernel,
    random_model_basis,
)
from .operators import SarasonFlavor, assemble, backshift_matrix, c0_decay_profile, sarason_backward
from .reports import VerificationReport, ratio
from .scenarios import (
    backward_instance,
    child_seeds,
    forward_instance,
    invariant_subspace,
    make_rng,
    random_blaschke,
    random_coanalytic,
    random_orthonormal,
    random_subspace,
)
from .subspaces import Subspace, almost_invariant_defect, model_space, orthonormal_columns
from .symbols import Blaschke, CoAnalyticPolynomial, ConjugateBlaschke, SymbolSpec


def _inner(spec, rng: np.random.Generator, default: str = "z") -> BlaschkeProduct:
    spec = default if spec is None else spec
    if spec == "z":
        return BlaschkeProduct((0j,))
    if spec == "z2":
        return BlaschkeProduct((0j, 0j))
    if spec == "random2":
        return random_blaschke(rng, 2)
    if isinstance(spec, dict) and "zeros" in spec:
        return BlaschkeProduct(parse_zeros(spec["zeros"], "params.phi.zeros"))
    raise PreconditionError(f"symbol {spec!r} is not inner")


def _blaschke(spec, rng: np.random.Generator, default_n: int = 2) -> BlaschkeProduct:
    if spec is None:
        return random_blaschke(rng, default_n)
    if isinstance(spec, dict):
        return random_blaschke(rng, int(spec["random"]))
    return BlaschkeProduct(parse_zeros(spec, "params"))


def _symbol(spec, rng: np.random.Generator) -> SymbolSpec:
    if spec is None:
        spec = {"random_coanalytic": 2}
    if spec == "conj_z":
        return ConjugateBlaschke(BlaschkeProduct((0j,)))
    if isinstance(spec, str):
        return Blaschke(_inner(spec, rng))
    (key, val), = spec.items()
    if key == "coanalytic":
        return CoAnalyticPolynomial(tuple(parse_coeffs(val, "params.phi.coanalytic")))
    if key == "random_coanalytic":
        return random_coanalytic(rng, int(val))
    return Blaschke(_inner(spec, rng))


def _span(rows, degree: int, eps_rank: float) -> Subspace:
    X = np.zeros((degree + 1, len(rows)), dtype=complex)
    for j, row in enumerate(rows):
        c = parse_coeffs(row, f"params.span[{j}]")
        if len(c) > degree + 1:
            raise PreconditionError(f"span vector {j} has degree {len(c) - 1} > {degree}")
        X[: len(c), j] = c
    return Subspace(orthonormal_columns(X, eps_rank), eps_rank)


def _canonical(v: np.ndarray) -> list[list[float]]:
    """Phase-normalised coefficients (largest entry real positive) up to the effective degree."""
    k = int(np.argmax(np.abs(v)))
    w = v * (abs(v[k]) / v[k]) if v[k] != 0 else v
    top = effective_degree(w, 1e-12)
    return [[round(float(c.real), 12) + 0.0, round(float(c.imag), 12) + 0.0] for c in w[: top + 1]]


def _rel_max(num: np.ndarray, den: np.ndarray) -> float:
    den = np.maximum(den, np.finfo(float).tiny)
    return float((num / den).max(initial=0.0))


def _decomposition(rep, rng, cfg, p, pre, kind):
    phi = _inner(p.get("phi"), rng)
    m = int(p.get("m", 2))
    inst = backward_instance(rng, phi, m, cfg, p.get("subspace", "invariant") == "full", int(p.get("support", 8)))
    X = spanning_samples(inst.M, rng, int(p.get("samples", 16)))
    batch = decompose_many(inst.M, inst.spec, X, cfg)
    res = batch.results
    fn = np.array([r.f_norm for r in res])
    eps = cfg.eps_residual
    rep.details[pre + "dim_M"] = inst.M.dim
    rep.details[pre + "p"] = batch.W.dim
    rep.details[pre + "steps"] = batch.steps
    rep.details[pre + "zeros"] = [complex(z) for z in phi.zeros]
    rep.traces[pre + "residual"] = batch.trace
    if kind == "decompose":
        rep.add(pre + "reconstruction", _rel_max(np.array([r.reconstruction_error for r in res]), fn), eps)
        rep.add(pre + "norm_gap", _rel_max(np.array([r.norm_gap for r in res]), fn**2), eps)
        rep.add(pre + "final_residual", _rel_max(np.array([r.final_residual for r in res]), fn), eps)
        if p.get("require_exact_zero", False):
            N = cfg.degree
            at = np.array([r.residual_norms[N] if len(r.residual_norms) > N else 0.0 for r in res])
            rep.add(pre + "exact_zero_by_N+1", _rel_max(at, fn), ROUNDING_ZERO)
        rep.extend(verify_K_shift_invariance(batch.samples, inst.M, inst.spec, cfg, int(p.get("shifts", 3))), pre + "K.")
    else:
        fs = [HardyFunction(batch.W.basis[:, j]) for j in range(batch.W.dim)]
        rep.extend(sarason_converse_check(inst.M, fs, batch.samples, cfg), pre)


def _forward_dual(rep, rng, cfg, p, pre):
    inst = forward_instance(rng, int(p.get("m", 2)), cfg, int(p.get("support", 8)))
    out = forward_dual_representation(inst.M, inst.spec, cfg, rng, int(p.get("samples", 16)))
    rep.extend(out.report, pre)
    rep.details[pre + "dim_M"] = inst.M.dim


def _almost(rep, rng, cfg, p, pre):
    S = backshift_matrix(cfg.degree)
    dirs = p.get("directions", ["forward", "reverse"])
    if "span" in p:
        M = _span(p["span"], cfg.degree, cfg.eps_rank)
        r = almost_bridge(S, M, BridgeDirection.ALMOST_TO_PERTURBATION, cfg)
        rep.extend(r, pre + "reverse.")
        d = almost_invariant_defect(S, M, cfg)
        rep.details[pre + "defect_basis"] = [_canonical(f.coeffs) for f in d.defect_basis]
        return
    support = int(p.get("support", 8))
    if "forward" in dirs:
        inst = backward_instance(rng, BlaschkeProduct((0j,)), int(p.get("m", 2)), cfg, False, support)
        r = almost_bridge(S, inst.M, BridgeDirection.PERTURBATION_TO_ALMOST, cfg, inst.spec.terms, sign=1)
        rep.extend(r, pre + "forward.")
    if "reverse" in dirs:
        M = random_subspace(rng, cfg, int(rng.integers(1, support + 1)), support)
        rep.extend(almost_bridge(S, M, BridgeDirection.ALMOST_TO_PERTURBATION, cfg), pre + "reverse.")


def _nearly(rep, rng, cfg, p, pre):
    B = _blaschke(p.get("B"), rng)
    source = p.get("source", "model_space")
    if source == "model_space":
        M = model_space(_blaschke(p.get("M_zeros"), rng, default_n=int(rng.integers(1, 7))), cfg)
    elif source == "corollary":
        T = kernel_perturbation(B, cfg)
        M = invariant_subspace(T, rng, cfg, int(p.get("dim", rng.integers(1, 9))))
        rep.extend(corollary_bridge(M, B, CorollaryDirection.FORWARD, cfg), pre + "corollary_forward.")
    else:
        M = _span(p["span"], cfg.degree, cfg.eps_rank)
    dec = nearly_decompose(M, B, cfg, rng=rng, n_random=int(p.get("samples", 16)))
    rep.extend(dec.report, pre + "decompose.")
    rep.add_flag(pre + "theta_zero", dec.theta_zero_flag)
    rep.extend(nearly_converse_check(dec.G0, dec.K_samples, B, cfg), pre + "converse.")
    rep.extend(corollary_bridge(M, B, CorollaryDirection.CONVERSE, cfg), pre + "corollary_converse.")
    inc = inclusion_check(M, B, cfg)
    rep.add_flag(pre + "inclusion", inc.holds)
    rep.details[pre + "r"] = dec.r
    rep.details[pre + "n"] = B.n
    rep.details[pre + "dim_M"] = M.dim


def _toeplitz_kernel(rep, rng, cfg, p, pre):
    phi = _symbol(p.get("phi"), rng)
    B = _blaschke(p.get("B"), rng, default_n=int(rng.integers(1, 5)))
    choices = [KernelGram()] + [random_model_basis(B, cfg, rng) for _ in range(int(p.get("bases", 3)))]
    for j, ch in enumerate(choices):
        out = perturbed_toeplitz_kernel(phi, B, ch, cfg)
        rep.extend(out.report, f"{pre}basis{j}.")
        if j == 0:
            rep.details[pre + "kernel_basis"] = [_canonical(out.kernel.basis[:, i]) for i in range(min(out.kernel.dim, 8))]
        inc = inclusion_check(out.kernel, B, cfg)
        rep.add_flag(f"{pre}basis{j}.inclusion", inc.holds)
    rep.details[pre + "B_zeros"] = [complex(z) for z in B.zeros]


def _c0(rep, rng, cfg, p, pre):
    phi = _inner(p.get("phi"), rng)
    if "fs" in p:
        sp = _span(p["fs"], cfg.degree, cfg.eps_rank)
        fs = sp.vectors()
    else:
        support = p.get("support")
        fs = random_orthonormal(rng, cfg.degree, int(p.get("m", 2)), None if support is None else int(support))
    S = assemble(sarason_backward(Blaschke(phi), fs, SarasonFlavor.ADJOINT_FIRST, cfg), cfg)
    n_max = int(p.get("n_max", cfg.degree + 1))
    worst, trace = 0.0, []
    for _ in range(int(p.get("g", 20))):
        g = rng.standard_normal(cfg.dim) + 1j * rng.standard_normal(cfg.dim)
        prof = c0_decay_profile(S, HardyFunction(g), n_max, cfg)
        rel = prof.norms[-1] / prof.norms[0]
        if rel >= worst:
            worst, trace = rel, [x / prof.norms[0] for x in prof.norms]
    rep.add(pre + "decay", worst, cfg.eps_residual)
    rep.traces[pre + "worst_profile"] = trace


def _counterexample(rep, rng, cfg, p, pre):
    rep.extend(counterexample_suite(_blaschke(p["B_minor"], rng), cfg), pre)


RUNNERS: dict[str, Callable] = {
    "decompose": lambda rep, rng, cfg, p, pre: _decomposition(rep, rng, cfg, p, pre, "decompose"),
    "sarason": lambda rep, rng, cfg, p, pre: _decomposition(rep, rng, cfg, p, pre, "sarason"),
    "forward_dual": _forward_dual,
    "almost_bridge": _almost,
    "nearly": _nearly,
    "toeplitz_kernel": _toeplitz_kernel,
    "counterexample": _counterexample,
    "c0_profile": _c0,
}


def run_scenario(sc: ScenarioConfig) -> VerificationReport:
    """Run every repetition; library precondition and convergence failures become failed checks."""
    t0 = time.perf_counter()
    cfg: TruncationConfig = sc.truncation
    rep = VerificationReport(sc.name)
    rep.environment.update(
        {
            "N": cfg.degree,
            "guard": cfg.guard,
            "eps_residual": cfg.eps_residual,
            "eps_rank": cfg.eps_rank,
            "seed": sc.seed,
            "kind": sc.kind,
            "tag": sc.tag,
            "repetitions": sc.repetitions,
            "hardy_lab": __version__,
        }
    )
    seeds = child_seeds(make_rng(sc.seed), sc.repetitions)
    for i, s in enumerate(seeds):
        pre = f"rep{i}." if sc.repetitions > 1 else ""
        rng = make_rng(s)
        try:
            RUNNERS[sc.kind](rep, rng, cfg, sc.params, pre)
        except ConvergenceError as exc:
            rep.add(pre + "converged", exc.trace[-1] if exc.trace else math.inf, cfg.eps_residual, False)
            rep.traces[pre + "stalled"] = exc.trace
            rep.details[pre + "error"] = str(exc)
        except PreconditionError as exc:
            rep.add_flag(pre + "precondition", False)
            rep.details[pre + "error"] = str(exc)
    rep.wall_time = time.perf_counter() - t0
    return rep


def aggregate(items: Sequence[tuple[ScenarioConfig, VerificationReport]]) -> dict:
    """Pass/fail counts and the worst check (by residual/threshold) per tag."""
    tags: dict[str, dict] = {}
    scenarios = []
    for sc, rep in items:
        w = rep.worst()
        entry = tags.setdefault(sc.tag, {"passed": 0, "failed": 0, "worst": None})
        entry["passed" if rep.passed else "failed"] += 1
        if w is not None:
            cand = {"scenario": sc.name, **w.to_dict()}
            cur = entry["worst"]
            if cur is None or (not w.passed, ratio(w.residual, w.threshold)) > (
                not cur["pass"],
                ratio(float(cur["residual"]), float(cur["threshold"])),
            ):
                entry["worst"] = cand
        scenarios.append(
            {
                "name": sc.name,
                "tag": sc.tag,
                "kind": sc.kind,
                "pass": rep.passed,
                "checks": len(rep.checks),
                "failed_checks": [c.name for c in rep.failures()],
            }
        )
    passed = sum(t["passed"] for t in tags.values())
    failed = sum(t["failed"] for t in tags.values())
    return {
        "schema_version": 1,
        "pass": failed == 0,
        "totals": {"passed": passed, "failed": failed},
        "tags": {k: tags[k] for k in sorted(tags)},
        "scenarios": scenarios,
    }


def run_many(configs: Sequence[ScenarioConfig], jobs: int = 1) -> list[VerificationReport]:
    if jobs <= 1 or len(configs) <= 1:
        return [run_scenario(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(run_scenario, configs))
