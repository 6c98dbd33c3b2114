"""Signed distance maps, closed-form segmentation losses and gradient checks."""
from .edt import DistanceField, prob_from_dtm, signed_dtm, squared_edt, surface_voxels
from .gradcheck import grad_check, numerical_gradient
from .losses import (
    LossWeights,
    ProbPair,
    atrialjsqnet_total,
    bce_loss,
    bce_loss_grad,
    cross_entropy_loss,
    cross_entropy_loss_grad,
    ddfseg_seg_loss,
    ddfseg_seg_loss_grad,
    l1_mean_loss,
    l1_mean_loss_grad,
    sa_loss,
    sa_loss_grad,
    se_loss_la,
    se_loss_la_grad,
    se_loss_scar,
    se_loss_scar_grad,
    soft_dice_loss,
    soft_dice_loss_grad,
)

__all__ = [
    "DistanceField",
    "LossWeights",
    "ProbPair",
    "atrialjsqnet_total",
    "bce_loss",
    "bce_loss_grad",
    "cross_entropy_loss",
    "cross_entropy_loss_grad",
    "ddfseg_seg_loss",
    "ddfseg_seg_loss_grad",
    "grad_check",
    "l1_mean_loss",
    "l1_mean_loss_grad",
    "numerical_gradient",
    "prob_from_dtm",
    "sa_loss",
    "sa_loss_grad",
    "se_loss_la",
    "se_loss_la_grad",
    "se_loss_scar",
    "se_loss_scar_grad",
    "signed_dtm",
    "soft_dice_loss",
    "soft_dice_loss_grad",
    "squared_edt",
    "surface_voxels",
]
