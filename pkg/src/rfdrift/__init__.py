"""Synthetic RF device-fingerprinting laboratory.

Generates impairment-bearing LoRa / WiFi 802.11b baseband captures whose
per-device hardware signatures drift over time, stores them as SigMF
recordings, frames them into 2x1024 tensors, and trains an adversarial
disentanglement network against a plain CNN baseline for temporal
domain-adaptation experiments.
"""

__version__ = "0.1.0"
