"""Numerical laboratory for the area of nonparametric surfaces z = f(x, y)."""

from .fields import (
    CATALOG_NAMES,
    Domain,
    GridField,
    OrientedRect,
    Regularity,
    ScalarField,
    UNIT_SQUARE,
    cantor,
    catalog_fields,
    eval_grad,
    integrate_line,
    integrate_rect,
    make_builtin,
    parse_descriptor,
)

__version__ = "0.1.0"
