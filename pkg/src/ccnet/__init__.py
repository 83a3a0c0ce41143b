"""Combinatorial complexes and higher-order neural networks on them."""

from .cochain import Cochain, apply_map, merge_node, push_forward, split_node
from .complex import CombinatorialComplex, build_cc, check_homomorphism, induced_sub_cc, skeleton
from .errors import StaleTape, ValidationError
from .lifting import Graph, augment, graph_cc, lattice_cc, loop_cc, n_hop_cc, path_cc

__version__ = "0.1.0"

__all__ = [
    "Cochain",
    "CombinatorialComplex",
    "Graph",
    "StaleTape",
    "ValidationError",
    "apply_map",
    "augment",
    "build_cc",
    "check_homomorphism",
    "graph_cc",
    "induced_sub_cc",
    "lattice_cc",
    "loop_cc",
    "merge_node",
    "n_hop_cc",
    "path_cc",
    "push_forward",
    "skeleton",
    "split_node",
]
