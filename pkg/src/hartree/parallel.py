import os


def max_workers() -> int:
    """Thread cap from ``HARTREE_THREADS`` (default: all cores)."""
    raw = os.environ.get("HARTREE_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"HARTREE_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1
