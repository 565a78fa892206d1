"""Numerology profiles and physical constants."""

from typing import Any, Dict, List, Optional, Tuple

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_HZ = -174.0

# Normal-CP lengths at the 30.72 MHz reference rate
CP_LONG_REF = 160
CP_SHORT_REF = 144
REFERENCE_RATE_HZ = 30.72e6

# Per-symbol relative frequency offsets of the staggered PRS comb
COMB_STAGGER: Dict[int, Tuple[int, ...]] = {
    2: (0, 1),
    4: (0, 2, 1, 3),
    6: (0, 3, 1, 4, 2, 5),
    12: (0, 6, 3, 9, 1, 7, 4, 10, 2, 8, 5, 11),
}

NUMEROLOGY_PROFILES: List[Dict[str, Any]] = [
    {
        "name": "full",
        "description": "mu=0, 10 MHz carrier sampled at 122.88 MHz",
        "mu": 0,
        "scs_hz": 15e3,
        "n_fft": 8192,
        "n_prb": 52,
    },
    {
        "name": "test",
        "description": "mu=0, 10 MHz carrier sampled at 30.72 MHz",
        "mu": 0,
        "scs_hz": 15e3,
        "n_fft": 2048,
        "n_prb": 52,
    },
]


def get_profile(name: str) -> Optional[Dict[str, Any]]:
    """Get numerology profile by name."""
    for profile in NUMEROLOGY_PROFILES:
        if profile["name"] == name:
            return profile
    return None


def get_all_profiles() -> List[str]:
    """Get all profile names."""
    return [profile["name"] for profile in NUMEROLOGY_PROFILES]


def normal_cp_lengths(sample_rate_hz: float, symbols_per_slot: int = 14) -> List[int]:
    """Normal cyclic prefix per symbol of one slot, scaled to the sample rate.

    The first symbol of each half-subframe carries the long prefix.
    """
    scale = sample_rate_hz / REFERENCE_RATE_HZ
    half = symbols_per_slot // 2
    return [
        int(round((CP_LONG_REF if l % half == 0 else CP_SHORT_REF) * scale))
        for l in range(symbols_per_slot)
    ]
