"""
SU_q(2) in its Toeplitz picture: the generators S and T, the
comultiplications Delta_0 and Delta_q, the intertwiner U between them and the
lifts used by the three-leg probes.
"""
