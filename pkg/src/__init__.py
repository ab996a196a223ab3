"""Pseudospectral lab - numerical verification of stability and continuous-dependence estimates on the torus."""
