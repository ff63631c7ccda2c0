"""Simulation of line-coded PAM4 over an IM/DD link with colored relative intensity noise.

Subpackages and modules:

``linecode``  PRBS, Gray PAM4, two-lane 8B/10B and Manchester-PAM4
``waveform``  waveform synthesis, Welch PSD, notch width, rate conversion
``channel``   RIN synthesis, MZM, photoreceiver, RIN metrics
``rxdsp``     frame sync, DD-LMS equalizer, slicing, decoding, error counting
``harness``   configuration, link runs, sweeps, calibration and the CLI
"""

__version__ = "0.1.0"
