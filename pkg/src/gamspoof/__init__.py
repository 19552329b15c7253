"""Spoofed-speech countermeasure toolkit: waveform augmentation, a small numpy
classifier trained with Adam or Adam+GAM, and detection metrics."""

__version__ = "0.1.0"
