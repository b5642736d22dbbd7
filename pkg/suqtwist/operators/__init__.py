from .core import (SparseOperator, InteriorSet, identity, zero, apply,
                   compose, compose_all, add, scale, adjoint, tensor,
                   tensor_all, linear_combination, from_matrix, from_entries,
                   power_projection, inv_sqrt, norm_estimate,
                   interior_for, interior_residual, locality_margin,
                   geometric_margin, geometric_tail)
