"""Packet-level simulator comparing fixed-rate, rate-adaptive and
QoE-aware admission-controlled video delivery over a shared bottleneck."""

__version__ = "0.1.0"

NS_PER_S = 1_000_000_000


def seconds(x: float) -> int:
    """Convert seconds to integer nanoseconds, rounding half up."""
    return int(x * NS_PER_S + 0.5)
