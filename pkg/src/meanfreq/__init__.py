"""Mean frequencies of closed geodesics, Poincare-map perturbations and loop-space resonance."""

__version__ = "0.1.0"
