"""Distributed-delay systems with oscillating Erlang memory, reduced to ODEs by the linear chain trick."""

from .kernels import KernelSpec, Oscillation, eval_erlang, eval_kernel, kernel_difference_norm, l1_norm
from .history import ConstantHistory, ExponentialHistory, FunctionHistory, parse_history
from .lct import AugmentedSystem, DelaySystemSpec, SpecError, augmented_dimension, initial_state, transform
from .logistic import LogisticParams, logistic_jacobian, logistic_rhs, logistic_spec, logistic_system
from .stability import char_poly, eigenvalues, jacobian, routh_hurwitz, stability_report
from .equilibria import delta_sequence, effective_gain, find_equilibrium, logistic_equilibrium

__version__ = "0.1.0"
