"""cokerlab: exact counting and Monte Carlo experiments for random p-adic
cokernels and random group quotients."""

__version__ = "0.1.0"
