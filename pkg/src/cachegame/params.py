"""Scalar knobs shared by the whole simulation."""

from __future__ import annotations

from dataclasses import dataclass, replace


class ConfigError(ValueError):
    """Raised for invalid configuration values."""


@dataclass(frozen=True)
class GameParams:
    """Weights, unit costs and estimator constants of the caching game.

    gamma      weight of the privacy-disclosure term in device utility
    beta       weight of the caching-cost term in device utility
    beta_ec    weight of the caching-cost term in edge utility
    eps_ec     unit caching cost at the edge
    eps_ud     unit caching cost on a device
    decay      exponential decay rate of the popularity score per slot
    smoothing  weight on the previous estimate in moving-average updates
    anchor     request count of the (hypothetical) most popular video; bounds
               the disclosure model. None means "resolve to 2 * num_users + 1"
               when a run starts.
    """

    gamma: float = 0.1
    beta: float = 0.1
    beta_ec: float = 0.1
    eps_ec: float = 1.0
    eps_ud: float = 1.0
    decay: float = 0.01
    smoothing: float = 0.9
    anchor: int | None = None

    def validate(self) -> None:
        if self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        for name in ("beta", "beta_ec", "eps_ec", "eps_ud", "decay"):
            value = getattr(self, name)
            if value <= 0:
                raise ConfigError(f"{name} must be > 0, got {value}")
        if not 0.0 <= self.smoothing <= 1.0:
            raise ConfigError(f"smoothing must be in [0, 1], got {self.smoothing}")
        if self.anchor is not None and self.anchor < 1:
            raise ConfigError(f"anchor must be a positive integer, got {self.anchor}")

    def resolve_anchor(self, num_users: int) -> "GameParams":
        """Return a copy whose anchor is concrete.

        The default 2 * num_users + 1 keeps the disclosure model admissible
        for every true request count (at most num_users devices can hold or
        newly gain a public-profile bit per video).
        """
        if self.anchor is not None:
            return self
        return replace(self, anchor=2 * num_users + 1)
