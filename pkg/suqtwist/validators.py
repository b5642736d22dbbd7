"""
argparse type validators. Each returns the converted value or raises
ValueError, so bad values are rejected before any operator is built.
"""

import functools
import logging

from suqtwist.models.common import (DeformationParameter, MIN_K_MAX,
                                    MIN_M_MAX)

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())  # squash annoying no Handler msg


def validate_q(value):
    """q in [0, 1)"""
    return DeformationParameter(value).q


def _validate_open_unit(name, value):
    x = float(value)
    if not 0.0 < x < 1.0:
        raise ValueError("{n} must lie in (0, 1), got {v}".format(n=name, v=value))
    return x


validate_tol = functools.partial(_validate_open_unit, "tol")


def _validate_int_at_least(lower, value):
    x = int(value)
    if x < lower:
        raise ValueError("Expected an integer >= {l}, got {v}".format(l=lower, v=value))
    return x


validate_positive_int = functools.partial(_validate_int_at_least, 1)
validate_non_negative_int = functools.partial(_validate_int_at_least, 0)
validate_window_size = functools.partial(_validate_int_at_least, min(MIN_K_MAX, MIN_M_MAX))


def validate_unit_modulus(t, atol=1e-12):
    """Parameter of the characters omega_t and representations rho_t"""
    t = complex(t)
    if abs(abs(t) - 1.0) > atol:
        raise ValueError("|t| must be 1, got |t| = {a}".format(a=abs(t)))
    return t
