from . import autodiff, layers, optim
from .autodiff import Tensor, gradcheck, no_grad

__all__ = ["autodiff", "layers", "optim", "Tensor", "gradcheck", "no_grad"]
