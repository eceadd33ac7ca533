"""Workbench for monadic second-order logic fragments over word-tree iterations.

The package turns sentences about the Shelah-Stupp iteration of a finite
relational structure (the tree of all finite words over its universe) into
weak-MSO sentences about the base structure expanded with automaton transition
matrices, and ships the machinery needed to trust that compilation: complete
DFA classifiers with brute-force twins, the size bounds that drive quantifier
compilation, an exact evaluator for finite models, a bounded oracle evaluating
sentences directly over the word tree, and a rank-equivalence laboratory.
"""

from itermso.errors import InternalError, ResourceLimit, UsageError

__version__ = "0.1.0"

__all__ = ["UsageError", "ResourceLimit", "InternalError", "__version__"]
