"""Spectral analysis of polytope facet graphs: formal Hessians, diameter
bounds, the facet Markov chain and smoothed-LP experiments."""

__version__ = "0.1.0"
