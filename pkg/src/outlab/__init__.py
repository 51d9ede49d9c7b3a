"""Outlier eigenvalues of iid random matrices under bounded-rank perturbations."""

__version__ = "0.1.0"
