"""Central tolerance set and operator-size budget.

Every default can be overridden through an environment variable named
``QNONLIN_TOL_<FIELD>`` (upper case), e.g. ``QNONLIN_TOL_HERMITICITY=1e-8``.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

from .errors import ValidationError

ENV_PREFIX = "QNONLIN_TOL_"
DEFAULT_MAX_OPERATOR_DIM = 4096


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-10
    trace: float = 1e-10
    psd_clip: float = 1e-10
    reconstruction: float = 1e-9
    cp: float = 1e-10
    tp: float = 1e-10
    kraus_psd: float = 1e-9
    trace_nonincreasing: float = 1e-10
    degenerate: float = 1e-10
    probability_sum: float = 1e-8
    detection: float = 1e-9
    triviality: float = 1e-10
    moment_slack: float = 0.05
    imag_root: float = 0.05

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    @classmethod
    def from_env(cls, environ=None) -> "Tolerances":
        environ = os.environ if environ is None else environ
        overrides = {}
        for field in dataclasses.fields(cls):
            raw = environ.get(ENV_PREFIX + field.name.upper())
            if raw is None:
                continue
            try:
                value = float(raw)
            except ValueError:
                raise ValidationError(f"{ENV_PREFIX}{field.name.upper()} is not a number: {raw!r}") from None
            if not value >= 0:
                raise ValidationError(f"{ENV_PREFIX}{field.name.upper()} must be nonnegative")
            overrides[field.name] = value
        return cls(**overrides)


_active = Tolerances()


def tol() -> Tolerances:
    """Return the tolerance set currently in effect."""
    return _active


def set_tolerances(tolerances: Tolerances) -> Tolerances:
    """Install ``tolerances`` process-wide and return the previous set."""
    global _active
    previous, _active = _active, tolerances
    return previous
