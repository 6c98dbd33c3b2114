"""
Signed distance maps and distance-weighted losses
=================================================

A signed distance map turns a mask into a field that is negative inside,
zero on the boundary voxels and positive outside. Distance-weighted losses
use it to punish errors far from the boundary more than errors near it.
"""

import numpy as np

from cardioquant.distfield import ProbPair, grad_check, prob_from_dtm, se_loss_la, se_loss_la_grad, signed_dtm
from cardioquant.volgrid import LABEL, Volume

##############################################################################
# One dimension first
# -------------------

print(signed_dtm(np.array([0, 0, 1, 1, 0])).values)

##############################################################################
# An anisotropic slab
# -------------------
#
# Spacing is honored, so the same voxel offset means different distances
# along different axes.

mask = np.zeros((9, 9, 9), np.uint8)
mask[2:7, 2:7, 2:7] = 1
field = signed_dtm(Volume(mask, (1.0, 1.0, 2.5), LABEL))
print("center value", field.values[4, 4, 4])
print("profile along z", field.values[4, 4, :])

##############################################################################
# Probability maps peak at 1 on the boundary and decay away from it.

p = prob_from_dtm(field)
print("max/min probability", p.max(), p.min().round(6))

normal = np.zeros_like(mask)
normal[2:7, 2:7, 2:4] = 1
scar = mask - normal
pair = ProbPair.from_masks(normal, scar)
print("pair shape", pair.stacked().shape)

##############################################################################
# Spatial-encoding loss
# ---------------------
#
# Confident, correct predictions lower the loss; the gradient is simply
# the distance map, which a finite-difference check confirms.

pred = np.clip(0.5 - 0.2 * field.values, 0.0, 1.0)
print("SE loss", se_loss_la(pred, field))
print("gradient check", grad_check(lambda v: se_loss_la(v, field), pred, se_loss_la_grad(pred, field)))
