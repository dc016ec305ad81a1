"""Leray-alpha pseudo-spectral simulator, bound certifier and singular-set analyzer."""

__version__ = "0.1.0"
