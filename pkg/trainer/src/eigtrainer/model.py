"""Sinusoidal MLP for the nonlinear part of a principal eigenfunction.

Architecture: input n -> 3 hidden layers of width 128 with sin activation
-> 2 outputs (real and imaginary part of h).  Initialization follows the
frequency-scaled scheme for sinusoidal networks: first layer uniform in
+-1/n, hidden layers uniform in +-sqrt(6/fan_in)/omega0, with the
frequency omega0 applied inside every activation.  The final linear layer
starts at zero so an untrained network is exactly the zero function.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn

__all__ = ["SineMLP"]


class SineMLP(nn.Module):
    def __init__(self, input_dim: int, width: int = 128, hidden_layers: int = 3,
                 output_dim: int = 2, omega0: float = 5.0):
        super().__init__()
        self.omega0 = float(omega0)
        dims = [input_dim] + [width] * hidden_layers
        self.hidden = nn.ModuleList(
            nn.Linear(dims[i], dims[i + 1]) for i in range(hidden_layers)
        )
        self.out = nn.Linear(width, output_dim)
        with torch.no_grad():
            bound = 1.0 / input_dim
            self.hidden[0].weight.uniform_(-bound, bound)
            self.hidden[0].bias.zero_()
            for layer in self.hidden[1:]:
                bound = math.sqrt(6.0 / layer.in_features) / self.omega0
                layer.weight.uniform_(-bound, bound)
                layer.bias.zero_()
            self.out.weight.zero_()
            self.out.bias.zero_()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for layer in self.hidden:
            x = torch.sin(self.omega0 * layer(x))
        return self.out(x)
