"""Two-dimensional simplex view of high-dimensional activations.

For a chosen 3-class subset, the row-normalized classifier is reduced to
its orthogonal polar factor Q (a semi-orthogonal 3 x d map onto the
classifier frame), and the three resulting coordinates are rendered
through a fixed triangle: the 2 x 3 vertex matrix A has unit columns
summing to zero, so the constant direction -- which the rank-2 classifier
cannot pin down -- is annihilated and the view is well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Triangle vertices as columns: one up, two down, unit norm, zero sum.
TRIANGLE = np.array(
    [
        [0.0, -np.sqrt(3.0) / 2.0, np.sqrt(3.0) / 2.0],
        [1.0, -0.5, -0.5],
    ]
)


@dataclass(frozen=True)
class ProjectionOperator:
    """Affine map h -> A Q (h - center) from feature space to the plane."""

    classes: tuple[int, int, int]
    Q: np.ndarray  # 3 x d, semi-orthogonal
    A: np.ndarray  # 2 x 3 triangle vertices
    center: np.ndarray  # d-vector


@dataclass
class ProjectedPoint:
    class_i: int
    class_ip: int
    lam: float
    kind: str
    amplified: bool
    px: float
    py: float


def _orthonormal_completion(vt: np.ndarray, k: int) -> np.ndarray:
    """Deterministic replacement for right-singular row k: the first
    standard basis vector with a nonzero residual against the other
    rows, orthonormalized."""
    d = vt.shape[1]
    others = [vt[j] for j in range(vt.shape[0]) if j != k]
    for axis in range(d):
        v = np.zeros(d)
        v[axis] = 1.0
        for o in others:
            v -= (o @ v) * o
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            return v / norm
    raise ValueError("could not complete an orthonormal basis")


def build_projection(
    w_rows: np.ndarray,
    activation_mean: np.ndarray | None = None,
    classes: tuple[int, int, int] = (0, 1, 2),
) -> ProjectionOperator:
    """Build the planar view operator from three classifier rows.

    Rows are normalized to unit length, then Q = U V^T from their SVD
    (the orthogonal polar factor). Signs are fixed per singular pair so
    the largest-magnitude entry of each left vector is positive; a zero
    singular value (exact rank-2 input) gets its right vector rebuilt by
    Gram-Schmidt, which the A 1 = 0 identity renders inconsequential.
    """
    w = np.asarray(w_rows, dtype=float)
    if w.ndim != 2 or w.shape[0] != 3:
        raise ValueError(f"expected a 3 x d classifier block, got shape {w.shape}")
    norms = np.linalg.norm(w, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("classifier block has a zero row")
    unit = w / norms[:, None]
    u, s, vt = np.linalg.svd(unit, full_matrices=False)
    if s[0] < 1e-12:
        raise ValueError("classifier block is numerically rank zero")
    vt = vt.copy()
    u = u.copy()
    for k in range(3):
        if s[k] < 1e-12 * s[0]:
            vt[k] = _orthonormal_completion(vt, k)
        if u[np.argmax(np.abs(u[:, k])), k] < 0.0:
            u[:, k] = -u[:, k]
            if s[k] >= 1e-12 * s[0]:
                vt[k] = -vt[k]
    q = u @ vt
    center = (
        np.zeros(w.shape[1])
        if activation_mean is None
        else np.asarray(activation_mean, dtype=float)
    )
    if center.shape != (w.shape[1],):
        raise ValueError(
            f"activation mean has shape {center.shape}, expected ({w.shape[1]},)"
        )
    return ProjectionOperator(
        classes=tuple(int(c) for c in classes), Q=q, A=TRIANGLE.copy(), center=center
    )


def project_vector(op: ProjectionOperator, h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != op.center.shape:
        raise ValueError(f"feature has shape {h.shape}, expected {op.center.shape}")
    return op.A @ (op.Q @ (h - op.center))


def project(op: ProjectionOperator, features) -> list[ProjectedPoint]:
    """Map feature records to the plane, preserving order and metadata."""
    out = []
    for rec in features:
        p = project_vector(op, rec.h)
        out.append(
            ProjectedPoint(
                class_i=rec.class_i,
                class_ip=rec.class_ip,
                lam=rec.lam,
                kind=rec.kind,
                amplified=rec.amplified,
                px=float(p[0]),
                py=float(p[1]),
            )
        )
    return out


POINTS_HEADER = "class_i,class_ip,lambda,kind,amplified,px,py"


def points_to_csv(points) -> str:
    lines = [POINTS_HEADER]
    for p in points:
        lines.append(
            f"{p.class_i},{p.class_ip},{p.lam!r},{p.kind},"
            f"{int(p.amplified)},{p.px!r},{p.py!r}"
        )
    return "\n".join(lines) + "\n"


def points_from_csv(text: str) -> list[ProjectedPoint]:
    lines = text.strip().split("\n")
    if not lines or lines[0] != POINTS_HEADER:
        raise ValueError(f"line 1: expected header '{POINTS_HEADER}'")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 7:
            raise ValueError(f"line {lineno}: expected 7 fields, got {len(parts)}")
        try:
            out.append(
                ProjectedPoint(
                    class_i=int(parts[0]),
                    class_ip=int(parts[1]),
                    lam=float(parts[2]),
                    kind=parts[3],
                    amplified=bool(int(parts[4])),
                    px=float(parts[5]),
                    py=float(parts[6]),
                )
            )
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad point row: {exc}")
    return out
