"""Closed-form optimal last-layer features for the mixup objective.

Solves the scalar fixed-point equations behind the two solution
families (same-class features on the classifier ray, different-class
features in the span of the two mixed classifier rows), assembles
feature vectors against a concrete simplex ETF, and applies the
channel amplification used for the perturbed configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .etf import SimplexEtf
from .mixup import DIFFERENT_CLASS, SAME_CLASS


@dataclass(frozen=True)
class TheoryParams:
    C: int
    m: float
    lambda_h: float
    d: int

    def __post_init__(self):
        if self.C < 2:
            raise ValueError(f"need at least 2 classes, got {self.C}")
        if self.m == 0:
            raise ValueError("multiplier must be nonzero")
        if not self.lambda_h > 0:
            raise ValueError(f"lambda_h must be positive, got {self.lambda_h}")
        if self.d < self.C:
            raise ValueError(f"feature dimension {self.d} must be >= {self.C}")


@dataclass(frozen=True)
class SameClassSolution:
    """Scalar description of the optimal same-class feature: it is
    coeff * w_i, with all other rows at inner product K < 0."""

    num_classes: int
    multiplier: float
    k: float
    inner_self: float  # (1-C) K
    inner_tail: float  # K
    coeff: float  # (1-C) K / m^2
    residual: float  # |log-form scalar equation| at K


@dataclass(frozen=True)
class DifferentClassSolution:
    """Scalar description of the optimal different-class feature
    h = coeff_i * w_i + coeff_ip * w_ip for a given mixing coefficient."""

    num_classes: int
    multiplier: float
    lam: float
    k_lambda: float
    inner_i: float
    inner_ip: float
    p_i: float
    p_ip: float
    p_tail: float
    partition_s: float
    coeff_i: float
    coeff_ip: float
    residual: float  # gradient norm of the assembled feature


@dataclass
class FeatureRecord:
    class_i: int
    class_ip: int
    lam: float
    h: np.ndarray
    kind: str  # SAME_CLASS or DIFFERENT_CLASS
    amplified: bool = False


def _gram(C: int, m2: float) -> np.ndarray:
    return m2 * (C / (C - 1.0)) * (np.eye(C) - np.ones((C, C)) / C)


def _diff_gradient_norm(sol: DifferentClassSolution, lambda_h: float) -> float:
    """Gradient norm of the assembled feature, computed intrinsically
    from the ETF Gram matrix (independent of the embedding dimension)."""
    C = sol.num_classes
    m2 = sol.multiplier**2
    coeffs = np.zeros(C)
    v = np.full(C, sol.p_tail)
    v[0] = sol.p_i - sol.lam
    v[1] = sol.p_ip - (1.0 - sol.lam)
    coeffs[0] = sol.coeff_i
    coeffs[1] = sol.coeff_ip
    # grad = W^T (p - y) + lambda_h h = W^T (v + lambda_h c)
    u = v + lambda_h * coeffs
    g = _gram(C, m2)
    return math.sqrt(max(float(u @ g @ u), 0.0))


def solve_same_class(params: TheoryParams) -> SameClassSolution:
    """Unique K < 0 of the same-class equation and its derived fields.

    Independent of the mixing coefficient: the soft target collapses to
    a single one-hot vector when both sources share a class.
    """
    C, m2, lh = params.C, params.m**2, params.lambda_h
    k = kernels.solve_same_class_k(C, m2, lh)
    return SameClassSolution(
        num_classes=C,
        multiplier=params.m,
        k=k,
        inner_self=(1.0 - C) * k,
        inner_tail=k,
        coeff=(1.0 - C) * k / m2,
        residual=abs(kernels.same_class_equation(k, C, m2, lh)),
    )


def _diff_from_same(params: TheoryParams, lam: float) -> DifferentClassSolution:
    """Degenerate lam in {0, 1}: the target is one-hot, so the solution
    is the same-class one for the surviving class."""
    same = solve_same_class(params)
    C, m2 = params.C, params.m**2
    k = same.k
    p = params.lambda_h * (1.0 - C) * k / (C * m2)
    p_top = 1.0 - (C - 1.0) * p
    s = math.exp(k) / p
    if lam == 1.0:
        inner_i, inner_ip = same.inner_self, k
        p_i, p_ip = p_top, p
    else:
        inner_i, inner_ip = k, same.inner_self
        p_i, p_ip = p, p_top
    sol = DifferentClassSolution(
        num_classes=C,
        multiplier=params.m,
        lam=lam,
        k_lambda=k,
        inner_i=inner_i,
        inner_ip=inner_ip,
        p_i=p_i,
        p_ip=p_ip,
        p_tail=p,
        partition_s=s,
        coeff_i=(1.0 - C) / (C * m2) * (k - inner_i),
        coeff_ip=(1.0 - C) / (C * m2) * ((C - 1.0) * k + inner_i),
        residual=0.0,
    )
    return replace(sol, residual=_diff_gradient_norm(sol, params.lambda_h))


def _diff_two_class(params: TheoryParams, lam: float) -> DifferentClassSolution:
    """C = 2: no tail classes. Inner products are +/-x with x solving a
    single increasing scalar equation; the tail value degenerates to 0
    (stored as k_lambda = 0 with p_tail = 0)."""
    m2 = params.m**2
    x = kernels.solve_two_class_inner(m2, params.lambda_h, lam)
    s = math.exp(x) + math.exp(-x)
    sol = DifferentClassSolution(
        num_classes=2,
        multiplier=params.m,
        lam=lam,
        k_lambda=0.0,
        inner_i=x,
        inner_ip=-x,
        p_i=math.exp(x) / s,
        p_ip=math.exp(-x) / s,
        p_tail=0.0,
        partition_s=s,
        coeff_i=x / (2.0 * m2),
        coeff_ip=-x / (2.0 * m2),
        residual=0.0,
    )
    return replace(sol, residual=_diff_gradient_norm(sol, params.lambda_h))


def solve_different_class(params: TheoryParams, lam: float) -> DifferentClassSolution:
    """Fixed-point solve for the different-class feature at coefficient
    lam in [0, 1]. Degenerate targets (lam exactly 0 or 1) reuse the
    same-class solve; C = 2 takes its own scalar path."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    if lam == 0.0 or lam == 1.0:
        return _diff_from_same(params, lam)
    if params.C == 2:
        return _diff_two_class(params, lam)
    C, m2, lh = params.C, params.m**2, params.lambda_h
    k, inner_i = kernels.solve_diff_k(C, m2, lh, lam)
    inner_ip = -(C - 2.0) * k - inner_i
    p_tail = (1.0 - C) * lh * k / (C * m2)
    p_i = lam + (1.0 - C) * lh * inner_i / (C * m2)
    p_ip = (1.0 - lam) + (1.0 - C) * lh * inner_ip / (C * m2)
    sol = DifferentClassSolution(
        num_classes=C,
        multiplier=params.m,
        lam=lam,
        k_lambda=k,
        inner_i=inner_i,
        inner_ip=inner_ip,
        p_i=p_i,
        p_ip=p_ip,
        p_tail=p_tail,
        partition_s=math.exp(k) / p_tail,
        coeff_i=(1.0 - C) / (C * m2) * (k - inner_i),
        coeff_ip=(1.0 - C) / (C * m2) * ((C - 1.0) * k + inner_i),
        residual=0.0,
    )
    sol = replace(sol, residual=_diff_gradient_norm(sol, params.lambda_h))
    if not (0.0 < p_i < 1.0 and 0.0 < p_ip < 1.0):
        raise kernels.KernelSolveError(
            f"solution probabilities out of range: p_i={p_i}, p_ip={p_ip}"
        )
    return sol


def assemble_feature(solution, etf: SimplexEtf, i: int, ip: int) -> FeatureRecord:
    """Materialize a scalar solution as a d-vector in the ETF row basis."""
    C = etf.num_classes
    if not (0 <= i < C and 0 <= ip < C):
        raise ValueError(f"class index out of range for C={C}: ({i}, {ip})")
    if solution.num_classes != C or solution.multiplier != etf.multiplier:
        raise ValueError("solution parameters do not match the supplied ETF")
    if isinstance(solution, SameClassSolution):
        if i != ip:
            raise ValueError("same-class solution needs i == ip")
        h = solution.coeff * etf.rows[i]
        return FeatureRecord(class_i=i, class_ip=ip, lam=math.nan, h=h, kind=SAME_CLASS)
    if i == ip:
        raise ValueError("different-class solution needs i != ip")
    h = solution.coeff_i * etf.rows[i] + solution.coeff_ip * etf.rows[ip]
    return FeatureRecord(
        class_i=i, class_ip=ip, lam=solution.lam, h=h, kind=DIFFERENT_CLASS
    )


def epsilon_amplification(lam: float) -> float:
    """Channel amplification magnitude, peaking at lam = 0.5 with value
    0.4 and symmetric about it."""
    return 0.8 * math.exp(-20.0 * (lam - 0.5) ** 4) - 0.4


def amplify(record: FeatureRecord, etf: SimplexEtf) -> FeatureRecord:
    """Push a different-class feature along w_i + w_ip by epsilon(lam);
    same-class records pass through unchanged."""
    if record.kind == SAME_CLASS:
        return record
    eps = epsilon_amplification(record.lam)
    # -eps * sum_{j != i, ip} w_j == +eps * (w_i + w_ip), rows sum to 0
    shift = eps * (etf.rows[record.class_i] + etf.rows[record.class_ip])
    return FeatureRecord(
        class_i=record.class_i,
        class_ip=record.class_ip,
        lam=record.lam,
        h=record.h + shift,
        kind=record.kind,
        amplified=True,
    )


def generate_configuration(
    params: TheoryParams,
    etf: SimplexEtf,
    class_subset,
    lambda_samples,
    amplified: bool = False,
) -> list[FeatureRecord]:
    """One feature per (lambda sample, ordered class pair), lambda-major
    order, with lambda samples shared across pairs."""
    class_subset = list(class_subset)
    lambda_samples = [float(v) for v in lambda_samples]
    if not class_subset:
        raise ValueError("empty class subset")
    if not lambda_samples:
        raise ValueError("empty lambda sample list")
    for c in class_subset:
        if not 0 <= c < params.C:
            raise ValueError(f"class {c} out of range for C={params.C}")
    same = solve_same_class(params)
    diff_cache: dict[float, DifferentClassSolution] = {}
    records = []
    for lam in lambda_samples:
        for i in class_subset:
            for ip in class_subset:
                if i == ip:
                    rec = assemble_feature(same, etf, i, ip)
                    rec.lam = lam
                else:
                    sol = diff_cache.get(lam)
                    if sol is None:
                        sol = solve_different_class(params, lam)
                        diff_cache[lam] = sol
                    rec = assemble_feature(sol, etf, i, ip)
                if amplified:
                    rec = amplify(rec, etf)
                records.append(rec)
    return records


CSV_KINDS = {SAME_CLASS, DIFFERENT_CLASS}


def features_to_csv(records, path) -> None:
    """Header class_i,class_ip,lambda,kind,amplified,h_0,...,h_{d-1};
    floats in shortest round-trip form."""
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    d = len(records[0].h)
    header = "class_i,class_ip,lambda,kind,amplified," + ",".join(
        f"h_{j}" for j in range(d)
    )
    lines = [header]
    for r in records:
        front = f"{r.class_i},{r.class_ip},{repr(float(r.lam))},{r.kind},{int(r.amplified)}"
        lines.append(front + "," + ",".join(repr(float(v)) for v in r.h))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def features_from_csv(path) -> list[FeatureRecord]:
    records = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[:5] != ["class_i", "class_ip", "lambda", "kind", "amplified"]:
            raise ValueError(f"{path}:1: unexpected feature CSV header")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                kind = parts[3]
                if kind not in CSV_KINDS:
                    raise ValueError(f"unknown kind {kind!r}")
                records.append(
                    FeatureRecord(
                        class_i=int(parts[0]),
                        class_ip=int(parts[1]),
                        lam=float(parts[2]),
                        h=np.array([float(v) for v in parts[5:]]),
                        kind=kind,
                        amplified=bool(int(parts[4])),
                    )
                )
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: bad feature row: {exc}")
    return records


def features_to_compact_json(params: TheoryParams, records) -> str:
    """Compact JSON: per record only the defining scalars (root, inner
    product, and the two row coefficients)."""
    same = None
    diff_cache: dict[float, DifferentClassSolution] = {}
    out = []
    m2 = params.m**2
    for r in records:
        if r.kind == SAME_CLASS:
            if same is None:
                same = solve_same_class(params)
            out.append(
                {
                    "K": same.k,
                    "inner_i": same.inner_self,
                    "coeff_i": same.coeff,
                    "coeff_ip": 0.0,
                }
            )
        else:
            sol = diff_cache.get(r.lam)
            if sol is None:
                sol = solve_different_class(params, r.lam)
                diff_cache[r.lam] = sol
            out.append(
                {
                    "K_lambda": sol.k_lambda,
                    "inner_i": sol.inner_i,
                    "coeff_i": sol.coeff_i,
                    "coeff_ip": sol.coeff_ip,
                }
            )
    return json.dumps(out)
