import contextlib
import os

from threadpoolctl import threadpool_limits

ENV_VAR = "AAMS_THREADS"


def thread_count():
    """Parallelism cap from ``AAMS_THREADS`` (defaults to the CPU count)."""
    raw = os.environ.get(ENV_VAR)
    if raw is None or not raw.strip():
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        from .errors import ConfigurationError

        raise ConfigurationError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    if n < 1:
        from .errors import ConfigurationError

        raise ConfigurationError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    return n


@contextlib.contextmanager
def limited(n=None):
    """Cap BLAS threads for the duration of the block."""
    n = thread_count() if n is None else n
    with threadpool_limits(limits=n):
        yield n
