"""Dynamical-decoupling coherence toolkit for a single dephasing qubit.

Modules
-------
sequences        pulse timings (Ramsey, echo, PDD, UDD, CPMG, symmetric five-pulse)
filter_function  frequency-domain filter g(w, tau)
noise            noise spectra and stationary Gaussian trajectories
coherence        chi(tau), W = exp(-chi), T2 extraction and Monte-Carlo cross-check
spectroscopy     filter-scan reconstruction of the noise spectrum
optimizer        grid search over symmetric five-pulse timings
calibration      fit of the heuristic noise model to measured coherence times
fitting          decay and Rabi fits
detection        threshold readout statistics
config, cli      YAML run configuration and command-line front end
"""
__version__ = "0.1.0"
