"""Numerical toolkit for tangent sets, set-valued derivatives, and metric
regularity estimation."""

try:
    from ._conekit import *  # noqa: F401,F403
except ImportError:  # development layout: extension built out of tree
    from _conekit import *  # noqa: F401,F403
