"""Blow-up solutions of (-Delta)^{1/2} u = eps kappa e^u on unions of intervals."""

__version__ = "0.1.0"
