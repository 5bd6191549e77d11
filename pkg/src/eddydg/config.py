"""Material and penalty parameter containers."""

from dataclasses import dataclass, field

__all__ = ["ConfigError", "MaterialConfig", "PenaltyConfig"]


class ConfigError(ValueError):
    """Invalid material, penalty or run configuration."""


@dataclass
class MaterialConfig:
    """Physical coefficients of the time-harmonic problem.

    Parameters
    ----------
    omega : float
        Angular frequency, > 0.
    mu0 : float
        Permeability used in the insulating region, > 0.
    mu : dict
        Permeability per material key (conducting cells), > 0.
    sigma : dict
        Conductivity per material key (conducting cells), > 0.
    """

    omega: float = 1.0
    mu0: float = 1.0
    mu: dict = field(default_factory=dict)
    sigma: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.omega > 0:
            raise ConfigError("omega must be positive")
        if not self.mu0 > 0:
            raise ConfigError("mu0 must be positive")
        for name, table in (("mu", self.mu), ("sigma", self.sigma)):
            for key, value in table.items():
                if not value > 0:
                    raise ConfigError(f"{name}[{key!r}] must be positive")

    def _lookup(self, table, name, key):
        try:
            return table[key]
        except KeyError:
            raise ConfigError(f"no {name} value for material {key!r}") from None

    def mu_of(self, key):
        return self._lookup(self.mu, "mu", key)

    def sigma_of(self, key):
        return self._lookup(self.sigma, "sigma", key)

    @classmethod
    def unit(cls, keys=("conductor",)):
        """Unit coefficients for every given conducting material key."""
        return cls(mu={k: 1.0 for k in keys}, sigma={k: 1.0 for k in keys})


@dataclass
class PenaltyConfig:
    """Interior-penalty parameters of the three stabilization terms."""

    a_conductor: float
    a_insulator: float
    alpha: float

    def __post_init__(self):
        for name in ("a_conductor", "a_insulator", "alpha"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    @classmethod
    def default(cls, degree):
        """Degree-scaled default, 10 (m+1)^2 for each parameter."""
        value = 10.0 * (degree + 1) ** 2
        return cls(value, value, value)
