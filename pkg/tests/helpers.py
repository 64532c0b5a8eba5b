import math


def sigma(p: float, n: int) -> float:
    """Standard error of an observed frequency with true rate ``p``."""
    return math.sqrt(p * (1 - p) / n)
