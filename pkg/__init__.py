"""
📡 prsguard - secure PRS positioning simulator

Simulates downlink time-difference positioning with encrypted and
authenticated positioning reference signals, replays spoofing, meaconing
and jamming attacks against it, and scores five attack-detection
techniques epoch by epoch.
"""

__version__ = "0.1.0"
__author__ = "prsguard developers"
__description__ = "Simulator for encrypted and authenticated PRS downlink positioning under attack"

__all__ = [
    "__version__",
    "__author__",
    "__description__",
]
