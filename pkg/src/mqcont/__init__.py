"""Multiquadric collocation of nonlinear elliptic systems with pseudo-arclength continuation.

Modules: ``basis`` (MQ functions and node sets), ``linalg`` (dense kernels),
``collocation`` (discretized systems), ``continuation`` (branch tracing and
event detection), ``problems`` (benchmark catalog and oracles), ``pipeline``
and ``cli`` (batch runs).
"""

from .basis import generate_nodes, shape_params
from .collocation import build_system
from .continuation import ContinuationSettings, run_continuation
from .problems import catalog

__all__ = ["generate_nodes", "shape_params", "build_system", "ContinuationSettings", "run_continuation", "catalog"]
__version__ = "0.1.0"
