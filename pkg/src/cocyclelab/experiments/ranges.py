# ABOUTME: Horizon list parsing for experiment configs
# ABOUTME: Converts range strings (e.g., "64..4096x4", "10..50+10", "8,16,32") to lists of counts

import re

# start..stop followed by xFACTOR (geometric) or +STEP (arithmetic)
RANGE_PATTERN = re.compile(r"^(\d+)\s*\.\.\s*(\d+)\s*([x+])\s*(\d+)$")

# Refuse ranges that would expand to more horizons than this.
MAX_HORIZONS = 10_000


def parse_n_list(horizons: str | list[int] | tuple[int, ...]) -> list[int]:
    """
    Parse a horizon description into a sorted list of distinct counts.

    Supports formats like:
    - "64..4096x4" (geometric: 64, 256, 1024, 4096)
    - "10..50+10" (arithmetic: 10, 20, 30, 40, 50)
    - "8,16,32" (explicit)
    - [64, 128] (already a list)

    Args:
        horizons: Range string or list of counts

    Returns:
        Sorted list of distinct nonnegative counts

    Raises:
        ValueError: If the format is invalid or a value is out of range

    Examples:
        >>> parse_n_list("64..4096x4")
        [64, 256, 1024, 4096]
        >>> parse_n_list("10..50+10")
        [10, 20, 30, 40, 50]
    """
    if isinstance(horizons, (list, tuple)):
        values = [int(v) for v in horizons]
    else:
        values = _parse_string(horizons)

    if not values:
        raise ValueError("Horizon list is empty")
    if any(v < 0 for v in values):
        raise ValueError(f"Horizons must be nonnegative. Got: {values}")
    return sorted(set(values))


def _parse_string(horizons: str) -> list[int]:
    text = horizons.strip().lower()
    if not text:
        raise ValueError("Horizon list is empty")

    match = RANGE_PATTERN.match(text)
    if match is None:
        if re.fullmatch(r"\d+(\s*,\s*\d+)*", text):
            return [int(part) for part in text.split(",")]
        raise ValueError(
            f"Invalid horizon format: '{horizons}'. "
            "Expected format like '64..4096x4', '10..50+10' or '8,16,32'"
        )

    start, stop, kind, amount = (
        int(match.group(1)),
        int(match.group(2)),
        match.group(3),
        int(match.group(4)),
    )
    if stop < start:
        raise ValueError(f"Range end {stop} is below its start {start}")

    values = []
    current = start
    if kind == "x":
        if amount < 2:
            raise ValueError(f"Geometric factor must be at least 2. Got: x{amount}")
        if start == 0:
            raise ValueError("Geometric ranges must start above 0")
        while current <= stop:
            values.append(current)
            current *= amount
    else:
        if amount < 1:
            raise ValueError(f"Arithmetic step must be positive. Got: +{amount}")
        if (stop - start) // amount + 1 > MAX_HORIZONS:
            raise ValueError(f"Range '{horizons}' expands to more than {MAX_HORIZONS} horizons")
        values = list(range(start, stop + 1, amount))
    return values
