"""Locale-independent numeric text for file exports."""


def fmt(value: float, sig: int = 10) -> str:
    """Format a float with `sig` significant digits.

    NaN renders as an empty cell, zero as plain "0" (no negative zero),
    and everything else through the "g" format with a "." separator.
    """
    if value != value:
        return ""
    if value == 0.0:
        return "0"
    return f"{value:.{sig}g}"
