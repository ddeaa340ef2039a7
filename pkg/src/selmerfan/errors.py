"""Error taxonomy shared by the library and the CLI.

Exit-code mapping lives in cli.main: ConfigError -> 2, DataError -> 3,
ConsistencyError -> 4.
"""


class ConfigError(ValueError):
    """Bad user-supplied configuration or arguments."""


class DataError(Exception):
    """Malformed or insufficient input data (CSV rows, cache gaps)."""


class ConsistencyError(Exception):
    """An internal cross-check failed; signals an arithmetic bug."""
