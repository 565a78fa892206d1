"""Signal processing, security and simulation core for prsguard."""

# Import modules without relative imports to avoid circular dependency issues

__all__ = [
    "errors",
    "prs_grid",
    "secure_prs",
    "auth_embed",
    "ldpc",
    "channel",
    "adversary",
    "receiver",
    "locate",
    "detect",
    "tracking",
    "scenario",
    "simulator",
    "metrics",
    "export",
]
