"""Refined Gaussian approximations of the negative binomial distribution."""

__version__ = "0.1.0"
