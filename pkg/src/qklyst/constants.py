"""
Physical constants, SI units, CODATA 2018 recommended values.

All device formulas read their constants from here and nowhere else. The
values are pinned (not taken from ``scipy.constants``) so results do not drift
when a newer CODATA set ships with a library upgrade.
"""

#: elementary charge, C (exact)
ELEMENTARY_CHARGE = 1.602176634e-19
#: electron rest mass, kg
ELECTRON_MASS = 9.1093837015e-31
#: reduced Planck constant, J s (exact, h / 2pi)
HBAR = 1.054571817e-34
#: speed of light in vacuum, m/s (exact)
SPEED_OF_LIGHT = 299792458.0
#: vacuum permittivity, F/m
EPSILON_0 = 8.8541878128e-12

physical_constants = {
    "elementary charge": (ELEMENTARY_CHARGE, "C"),
    "electron mass": (ELECTRON_MASS, "kg"),
    "reduced Planck constant": (HBAR, "J s"),
    "speed of light in vacuum": (SPEED_OF_LIGHT, "m s^-1"),
    "vacuum electric permittivity": (EPSILON_0, "F m^-1"),
}
