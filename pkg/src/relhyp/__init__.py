"""Finite models of relatively hyperbolic groups: Cayley balls, coned-off and
cusped graphs, hyperbolicity constants, coset penetration and boundary samples."""

from .errors import ConfigError, InputError, MalformedPathError, ResourceError
from .words import (
    PeripheralFamily,
    cyclic_peripheral,
    direct_product,
    factor_peripheral,
    free_abelian,
    free_group,
    free_product,
    oracle_from_spec,
    surface_group,
    whole_peripheral,
)
from .cayley import build_ball
from .coning import cone_off
from .cusping import build_cusped

__version__ = "0.1.0"
