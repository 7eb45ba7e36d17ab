"""
Vehicle Parameters Module
Physical constants of the single-track race car model and their config-file
loader. The defaults describe the all-electric mid-size sedan used for the
race-driving experiments.
"""

import hashlib
import math
import os
from dataclasses import dataclass, fields, replace

from dotenv import dotenv_values

from utils.atomic import write_text_atomic
from utils.errors import ValidationError


@dataclass(frozen=True)
class VehicleParams:
    """
    Parameters of the single-track model (SI units).

    The motor's base speed is not stored; it is derived as the crossover
    speed v_base = p_max * wheel_radius / k_motor between the constant-torque
    and constant-power regions.
    """

    mass: float = 1860.0                    # kg
    l_f: float = 1.17                       # m, CG to front axle
    l_r: float = 1.77                       # m, CG to rear axle
    wheel_radius: float = 0.31              # m
    c_alpha_f: float = 54500.0              # N/rad, per tire
    c_alpha_r: float = 54500.0              # N/rad, per tire
    f_roll: float = 0.015
    delta_max: float = math.radians(35.0)   # rad
    delta_rate_max: float = 0.7             # rad/s
    inertia_z: float = 4000.0               # kg m^2
    c_drag: float = 0.3
    rho_air: float = 1.2258                 # kg/m^3
    frontal_area: float = 2.05              # m^2
    p_max: float = 125000.0                 # W
    k_motor: float = 1550.0                 # N m
    k_brake: float = 16422.0                # N
    mu_max: float = 1.15
    g: float = 9.81                         # m/s^2
    v_switch: float = 1.0                   # m/s, kinematic/dynamic lateral model switch
    eps_v: float = 0.1                      # m/s, rolling resistance cut-off

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value) or value <= 0.0:
                raise ValidationError(f"vehicle parameter {f.name} must be finite and > 0, got {value!r}")

    @property
    def v_base(self) -> float:
        return self.p_max * self.wheel_radius / self.k_motor

    @property
    def wheelbase(self) -> float:
        return self.l_f + self.l_r

    @property
    def max_friction_force(self) -> float:
        return self.mu_max * self.mass * self.g

    def with_mu_max(self, mu_max):
        return replace(self, mu_max=float(mu_max))

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def serialize(self):
        """Canonical `key = value` text, one line per parameter."""
        return "".join(f"{key} = {value!r}\n" for key, value in self.as_dict().items())

    def hash(self) -> bytes:
        """SHA-256 digest of the canonical serialization (32 bytes)."""
        return hashlib.sha256(self.serialize().encode("utf-8")).digest()

    @classmethod
    def from_file(cls, path):
        return load_vehicle_params(path)

    def to_file(self, path):
        write_text_atomic(path, self.serialize())


def load_vehicle_params(path):
    """
    Load vehicle parameters from a `key = value` config file.

    Keys must be VehicleParams field names; missing keys keep their
    defaults.

    Parameters:
    -----------
    path : str
        Path to the UTF-8 config file

    Returns:
    --------
    VehicleParams
        Validated parameter set

    Raises:
    -------
    ValidationError
        On unknown keys, missing values or non-numeric values
    """
    # dotenv_values quietly returns {} for a missing file
    if not os.path.isfile(path):
        raise ValidationError(f"vehicle config not found: {path}")
    try:
        raw = dotenv_values(path, encoding="utf-8")
    except OSError as e:
        raise ValidationError(f"cannot read vehicle config {path}: {e}") from e

    known = {f.name for f in fields(VehicleParams)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValidationError(f"unknown vehicle parameter(s) in {path}: {', '.join(unknown)}")

    values = {}
    for key, text in raw.items():
        if text is None or not text.strip():
            raise ValidationError(f"vehicle parameter {key} has no value in {path}")
        try:
            values[key] = float(text)
        except ValueError:
            raise ValidationError(f"vehicle parameter {key} is not a number: {text!r}") from None
    return VehicleParams(**values)
