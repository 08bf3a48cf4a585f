"""
Optimal waiting thresholds package.
Fits censored recovery-time distributions to state-transition logs and
computes the intervention thresholds that minimize expected downtime.
"""

__version__ = "0.1.0"
