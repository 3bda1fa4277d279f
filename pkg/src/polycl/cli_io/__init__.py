"""Command-line surface, run configuration, and the augmentation-sweep
driver.

The entry point lives in :mod:`polycl.cli_io.main`; this package level only
re-exports the config machinery so library users can validate run configs
without pulling in the CLI.
"""

from .config import (
    FINGERPRINT_NAME,
    RunConfig,
    fingerprint,
    load_run_config,
    write_fingerprint,
)

__all__ = [
    "FINGERPRINT_NAME",
    "RunConfig",
    "fingerprint",
    "load_run_config",
    "write_fingerprint",
]
