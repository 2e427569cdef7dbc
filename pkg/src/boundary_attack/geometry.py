"""Decision-boundary geometry on the classification head.

Given a text vector v and a head, find the nearest point b on the head's
decision boundary (the locus where the top two logits tie), the offset
r = b - v, its unit direction, and signed distances. For an affine head the
nearest boundary point has a closed form; for general differentiable heads an
iterative linearization is provided.

Heads must expose ``logits(v) -> (C,)`` and ``jacobian(v) -> (C, H)``;
:class:`boundary_attack.model.AffineHead` does.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BoundaryStep:
    """Nearest-boundary solution: ``boundary_point = v + offset`` exactly,
    ``unit`` is ``offset / distance`` (None when already on the boundary)."""

    boundary_point: np.ndarray
    offset: np.ndarray
    unit: np.ndarray | None
    distance: float
    target_class: int


@dataclass(frozen=True)
class ProjectionResult:
    """Orthogonal projection of a displacement onto a boundary direction.

    ``vector`` is parallel to the direction; ``score`` is the signed length
    (positive means the displacement points toward the boundary)."""

    vector: np.ndarray
    score: float


def _nearest_rival(z: np.ndarray, jac: np.ndarray, winner: int):
    """Closest rival class under the local linearization.

    Returns (rival, margin, normal, norm): ``margin`` is the logit gap
    ``z[rival] - z[winner]`` (<= 0), ``normal`` the gradient of that gap.
    """
    best = None
    for l in range(z.shape[0]):
        if l == winner:
            continue
        normal = jac[l] - jac[winner]
        norm = float(np.linalg.norm(normal))
        if norm == 0.0:
            continue
        ratio = abs(float(z[l] - z[winner])) / norm
        if best is None or ratio < best[0]:
            best = (ratio, l, float(z[l] - z[winner]), normal, norm)
    if best is None:
        raise ValueError("no boundary: all rival rows coincide with the winner")
    _, rival, margin, normal, norm = best
    return rival, margin, normal, norm


def deepfool_affine(head, v: np.ndarray) -> BoundaryStep:
    """Exact nearest boundary point of an affine head.

    For each rival class l the boundary with the predicted class is the
    hyperplane where the logit gap vanishes; the nearest one wins. The offset
    solves ``gap(v + offset) = 0`` exactly, so the top two logits tie at the
    returned point.
    """
    v = np.asarray(v, dtype=np.float64)
    z = head.logits(v)
    jac = head.jacobian(v)
    winner = int(np.argmax(z))
    rival, margin, normal, norm = _nearest_rival(z, jac, winner)
    offset = (-margin / (norm * norm)) * normal
    distance = float(np.linalg.norm(offset))
    unit = offset / distance if distance > 0.0 else None
    return BoundaryStep(v + offset, offset, unit, distance, rival)


def deepfool_iterative(
    head, v: np.ndarray, overshoot: float = 0.02, max_iter: int = 50
) -> BoundaryStep:
    """Iterative linearization for general differentiable heads.

    Repeats local affine steps (scaled past the linearized boundary by
    ``1 + overshoot``) until the predicted class flips or ``max_iter`` runs
    out. The reported offset has the overshoot divided out; on an affine head
    this terminates after one step and matches :func:`deepfool_affine`.
    """
    v = np.asarray(v, dtype=np.float64)
    z0 = head.logits(v)
    winner = int(np.argmax(z0))
    total = np.zeros_like(v)
    rival = winner
    x = v
    for _ in range(max_iter):
        z = head.logits(x)
        if int(np.argmax(z)) != winner:
            break
        jac = head.jacobian(x)
        rival, margin, normal, norm = _nearest_rival(z, jac, winner)
        if margin == 0.0 and np.array_equal(x, v):
            return BoundaryStep(v.copy(), np.zeros_like(v), None, 0.0, rival)
        total = total + (-margin / (norm * norm)) * normal
        x = v + (1.0 + overshoot) * total
    else:
        raise ValueError(f"boundary not found within {max_iter} iterations")

    # Refine along the final direction: bisect the crossing so the reported
    # distance sits on the boundary itself, with the overshoot divided out.
    unit = total / np.linalg.norm(total)
    t_lo, t_hi = 0.0, (1.0 + overshoot) * float(np.linalg.norm(total))
    rival = int(np.argmax(head.logits(v + t_hi * unit)))
    for _ in range(80):
        mid = 0.5 * (t_lo + t_hi)
        z_mid = head.logits(v + mid * unit)
        if int(np.argmax(z_mid)) != winner:
            t_hi = mid
            rival = int(np.argmax(z_mid))
        else:
            t_lo = mid
    distance = t_hi
    offset = distance * unit
    return BoundaryStep(v + offset, offset, unit, distance, rival)


def project(d: np.ndarray, r: np.ndarray) -> ProjectionResult:
    """Project displacement ``d`` onto direction ``r``: ``p = (d.r/|r|^2) r``.

    The score ``d.r/|r|`` is the signed length of the projection; it depends
    on ``r`` only through its direction. Zero ``r`` is an error.
    """
    d = np.asarray(d, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    rr = float(r @ r)
    if rr == 0.0:
        raise ValueError("cannot project onto a zero direction")
    dr = float(d @ r)
    return ProjectionResult((dr / rr) * r, dr / np.sqrt(rr))


def projection_scores(displacements: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Signed projection lengths for a (M, H) batch of displacements."""
    r = np.asarray(r, dtype=np.float64)
    norm = float(np.linalg.norm(r))
    if norm == 0.0:
        raise ValueError("cannot project onto a zero direction")
    return np.asarray(displacements, dtype=np.float64) @ (r / norm)


def signed_distance(head, v: np.ndarray, reference_class: int) -> float:
    """Boundary distance, positive while the head still picks ``reference_class``.

    The magnitude is the nearest-boundary distance at ``v``; the sign flips
    once the prediction leaves the reference class.
    """
    v = np.asarray(v, dtype=np.float64)
    step = deepfool_affine(head, v) if _is_affine(head) else deepfool_iterative(head, v)
    sign = 1.0 if int(np.argmax(head.logits(v))) == reference_class else -1.0
    return sign * step.distance


def _is_affine(head) -> bool:
    return getattr(head, "weight", None) is not None and hasattr(head, "bias")
