"""Photon-number noise in heralded three-photon interferometers.

Submodules:
    oracle    truncated Fock-space brute-force simulation
    model     closed-form coincidence rates, SNR and the ratio R
    protocol  three-step shutter measurement, attenuation experiments
    fidelity  average teleportation fidelity and Monte-Carlo intervals
    datasets  embedded measurement tables
    fitting   weighted fits of the model to the tables
    cli       command-line front end
"""

__version__ = "0.1.0"

from rtnoise.model import CoincidenceRates, SourceParams  # noqa: E402

__all__ = ["__version__", "SourceParams", "CoincidenceRates"]
