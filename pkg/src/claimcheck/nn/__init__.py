from .tensor import Parameter, as_tensor, make_rng, spawn_rngs, uniform_init
from .layers import (
    BatchNorm,
    EmbeddingTable,
    Linear,
    LstmEncoder,
    dropout,
    dropout_backward,
    masked_softmax,
    masked_softmax_backward,
    relu,
    relu_backward,
    sigmoid,
)
from .loss import bce_loss, mean_bce
from .optim import Adam, adam_step, cyclical_lr, default_base_lr, steps_per_epoch
from .gradcheck import gradcheck

__all__ = [
    "Adam",
    "BatchNorm",
    "EmbeddingTable",
    "Linear",
    "LstmEncoder",
    "Parameter",
    "adam_step",
    "as_tensor",
    "bce_loss",
    "cyclical_lr",
    "default_base_lr",
    "dropout",
    "dropout_backward",
    "gradcheck",
    "make_rng",
    "masked_softmax",
    "masked_softmax_backward",
    "mean_bce",
    "relu",
    "relu_backward",
    "sigmoid",
    "spawn_rngs",
    "steps_per_epoch",
    "uniform_init",
]
