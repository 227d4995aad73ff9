"""Process-level settings read from the environment."""

import logging
import os
from typing import MutableMapping, Optional

from src.constants import BLAS_THREAD_VARS, THREADS_ENV_VAR
from src.core.errors import ConfigError

logger = logging.getLogger(__name__)


def thread_limit(env: Optional[MutableMapping[str, str]] = None) -> Optional[int]:
    """Value of ``HK_THREADS`` as a positive int, or None when unset."""
    env = os.environ if env is None else env
    raw = env.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got '{raw}'") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV_VAR} must be >= 1, got {value}")
    return value


def apply_thread_limit(env: Optional[MutableMapping[str, str]] = None) -> Optional[int]:
    """
    Export ``HK_THREADS`` to the BLAS/OpenMP thread variables.

    Only effective before numpy is first imported; worker processes inherit
    the exported values. Variables that are already set are left alone.
    """
    env = os.environ if env is None else env
    limit = thread_limit(env)
    if limit is not None:
        for name in BLAS_THREAD_VARS:
            env.setdefault(name, str(limit))
        logger.debug(f"Numerical thread limit set to {limit}")
    return limit
