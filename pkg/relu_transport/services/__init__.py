# Service modules
from .network import AffineMap, Network, realize, size, serialize, deserialize
from .graph_builder import Affine, NetworkBuilder
from .calculus import parallelize, sparse_concat, sum_nets, multiply_nets, mul_gadget_net
from .smooth_approx import approx_smooth, approx_univariate_library
from .characteristics import FlowMap, reference_solution, problem_from_config
from .quadrature_net import riemann_net, left_riemann
from .transport_builder import (
    TransportBuilder, build_homogeneous, build_weak, build_source, build_conservative, build_damped,
)
from .harness import run_sweep, fit_scaling
from .property_suites import run_suites

__all__ = [
    "AffineMap", "Network", "realize", "size", "serialize", "deserialize",
    "Affine", "NetworkBuilder",
    "parallelize", "sparse_concat", "sum_nets", "multiply_nets", "mul_gadget_net",
    "approx_smooth", "approx_univariate_library",
    "FlowMap", "reference_solution", "problem_from_config",
    "riemann_net", "left_riemann",
    "TransportBuilder", "build_homogeneous", "build_weak", "build_source", "build_conservative", "build_damped",
    "run_sweep", "fit_scaling",
    "run_suites",
]
