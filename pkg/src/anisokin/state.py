"""Containers for the coupled unknowns at one time level."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class Constants:
    """Nondimensional groups; all default to one."""

    Re: float = 1.0
    Pe: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    tau: float = 1.0
    kappa: float = 0.0

    def __post_init__(self):
        for name in ("Re", "Pe", "alpha", "beta", "gamma", "tau"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.kappa < 0:
            raise ParameterError("kappa must be nonnegative")

    # weights that turn the tested equations into one energy balance
    @property
    def w_kinetic(self):
        return self.beta * self.Re / self.alpha

    @property
    def w_viscous(self):
        return self.beta / self.alpha

    @property
    def w_field(self):
        return self.beta / self.gamma

    @property
    def w_charge(self):
        return 1.0 / self.Pe


@dataclass
class SimulationState:
    t: float
    flow: object          # FlowState
    charges: object       # ChargePair
    psi: np.ndarray
    phi: np.ndarray
    xi: np.ndarray        # boundary datum at time t
    director: object      # DirectorField
    poisson: object       # RobinOperator
    constants: Constants = field(default_factory=Constants)
    history: tuple = None  # (dt, charges) of the previous level, used to predict the next one

    @property
    def grid(self):
        return self.director.grid

    @property
    def mobility(self):
        return self._cached("_mobility", self.director.mobility)

    @property
    def permittivity(self):
        return self.poisson.tensor

    def _cached(self, name, fn):
        val = self.__dict__.get(name)
        if val is None:
            val = fn()
            self.__dict__[name] = val
        return val

    def copy(self):
        out = SimulationState(self.t, self.flow.copy(), self.charges.copy(), self.psi.copy(), self.phi.copy(),
                              self.xi.copy(), self.director, self.poisson, self.constants, self.history)
        if "_mobility" in self.__dict__:
            out.__dict__["_mobility"] = self.__dict__["_mobility"]
        return out

    def is_finite(self):
        arrays = (self.psi, self.phi, self.charges.c_plus, self.charges.c_minus, self.flow.p)
        return self.flow.v.is_finite() and all(np.isfinite(a).all() for a in arrays)
