"""Numerical toolkit for the spectral analysis of spike-layer model problems.

Modules: ``ground_state`` (radial profile and constants), ``fiber`` (the
α-family of radial eigenproblems), ``geometry`` (model submanifold spectra),
``model_operator`` (assembled model spectrum, Morse counts, gaps, sweeps),
``corrector`` (first-order corrector and projection identities) and ``cli``.
"""

__version__ = "0.1.0"
