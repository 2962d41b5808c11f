"""Symplectic isotopies of the flat torus: Hodge splitting, flux, lengths and energies."""

from .errors import BaseNormContract, NotClosed, NotHamiltonian, NotHarmonic, ResolutionMismatch, SymptorusError
from .grid_calculus import OneForm, ScalarField, VectorField, exterior_derivative, musical, osc
from .hodge import HarmonicForm, HodgeSplit, basis_sup_norms, field_norm, harmonic_norm, hodge_decompose
from .isotopy import (
    BumpReparam,
    FlowMap,
    Isotopy,
    concatenate,
    factorize,
    flow,
    hamiltonian_isotopy,
    harmonic_isotopy,
    inverse,
)

__version__ = "0.1.0"
