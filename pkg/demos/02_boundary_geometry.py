"""Decision-boundary geometry on a toy affine head, step by step.

A 3-class affine head over a 2-d text-vector space: find the nearest point
on the decision boundary, verify the logits tie there, and project a few
candidate displacement vectors onto the boundary direction. The projection
score is what the attack maximizes when choosing among synonyms.
"""

import numpy as np

from boundary_attack.geometry import deepfool_affine, deepfool_iterative, project, signed_distance
from boundary_attack.model import AffineHead

head = AffineHead(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]]), np.zeros(3))
v = np.array([3.0, 1.0])

z = head.logits(v)
print(f"text vector v = {v}, logits = {z}, predicted class {np.argmax(z)}")

step = deepfool_affine(head, v)
print(f"nearest boundary point b = {step.boundary_point} "
      f"(toward class {step.target_class}), distance {step.distance:.4f}")
print(f"logits at b = {head.logits(step.boundary_point)}  <- top two tie")

print(f"signed distance (reference = predicted class): "
      f"{signed_distance(head, v, int(np.argmax(z))):+.4f}")
print(f"signed distance after crossing: "
      f"{signed_distance(head, v + 1.5 * step.offset, int(np.argmax(z))):+.4f}")

# candidate displacements, as if produced by different synonym swaps
candidates = {
    "toward the boundary": np.array([-0.9, 0.8]),
    "parallel to it": np.array([0.7, 0.7]),
    "away from it": np.array([0.8, -0.9]),
}
print("\nprojection scores onto the boundary direction:")
for name, d in candidates.items():
    res = project(d, step.offset)
    print(f"  d = {d}  ({name:>20s}): score {res.score:+.4f}")

# the iterative variant agrees with the closed form on affine heads
it = deepfool_iterative(head, v)
print(f"\niterative search distance {it.distance:.6f} "
      f"vs closed form {step.distance:.6f}")
