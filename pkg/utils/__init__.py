"""Numerology profiles and logging helpers for prsguard."""

from .log_setup import setup_logging
from .profiles import get_all_profiles, get_profile

__all__ = ["get_all_profiles", "get_profile", "setup_logging"]
