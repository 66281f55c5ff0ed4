"""spinlab: desk-scale lab for spin-lattice energies and their continuum limits."""

from .geometry import (
    DomainSpec,
    EmptyLatticeError,
    Lattice,
    NeighborTable,
    TetDecomposition,
    build_lattice,
    decompose,
    neighbors,
)

__all__ = [
    "DomainSpec",
    "EmptyLatticeError",
    "Lattice",
    "NeighborTable",
    "TetDecomposition",
    "build_lattice",
    "decompose",
    "neighbors",
]
