"""
Input validation utilities for the power control library.

This module provides reusable validation functions for the numeric inputs
shared by every module: positive quantities, bounded ranges, probabilities
and slot counts. This keeps the validation sections of the solver, the
delay formulas and the simulator consistent and free of duplication.

Usage:
    from modules import validators

    is_valid, error_msg = validators.validate_positive_float(Ts, "Ts_s", context)
    if not is_valid:
        raise errors.DomainError(error_msg)
"""

import logging
import math
from typing import Optional, Sequence, Tuple


def _reject(error_msg: str, context: str) -> Tuple[bool, Optional[str]]:
    if context:
        logging.error(f"{context}: {error_msg}")
    return False, error_msg


def validate_number(value, name: str = "value", context: str = "") -> Tuple[bool, Optional[str]]:
    """
    Validate that a value is a finite real number.

    Booleans are rejected even though they are ints in Python.

    Args:
        value: The value to validate
        name (str): Name of the quantity, used in the error message
        context (str): Optional context string for logging (e.g., function name)

    Returns:
        Tuple[bool, Optional[str]]:
            - (True, None) if value is valid
            - (False, error_message) if value is invalid
    """
    # Step 1: Check the type
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return _reject(f"{name} must be a number, got {type(value).__name__}: {value}", context)

    # Step 2: Reject NaN and infinities
    if not math.isfinite(value):
        return _reject(f"{name} must be finite, got: {value}", context)

    return True, None


def validate_positive_float(value, name: str = "value", context: str = "") -> Tuple[bool, Optional[str]]:
    """
    Validate that a value is a finite number strictly greater than zero.

    Example:
        >>> is_valid, error = validate_positive_float(1e-3, "Ts_s")
        >>> is_valid
        True
    """
    is_valid, error_msg = validate_number(value, name, context)
    if not is_valid:
        return is_valid, error_msg

    if value <= 0:
        return _reject(f"{name} must be > 0, got: {value}", context)

    return True, None


def validate_non_negative_float(value, name: str = "value", context: str = "") -> Tuple[bool, Optional[str]]:
    """Validate that a value is a finite number greater than or equal to zero."""
    is_valid, error_msg = validate_number(value, name, context)
    if not is_valid:
        return is_valid, error_msg

    if value < 0:
        return _reject(f"{name} must be >= 0, got: {value}", context)

    return True, None


def validate_range(
    value,
    lower: Optional[float] = None,
    upper: Optional[float] = None,
    name: str = "value",
    lower_inclusive: bool = True,
    upper_inclusive: bool = True,
    context: str = "",
) -> Tuple[bool, Optional[str]]:
    """
    Validate that a number lies inside an interval.

    Args:
        value: The value to validate
        lower (Optional[float]): Lower end of the interval (None = unbounded)
        upper (Optional[float]): Upper end of the interval (None = unbounded)
        name (str): Name of the quantity, used in the error message
        lower_inclusive (bool): Whether the lower end belongs to the interval
        upper_inclusive (bool): Whether the upper end belongs to the interval
        context (str): Optional context string for logging (e.g., function name)

    Returns:
        Tuple[bool, Optional[str]]:
            - (True, None) if value is valid
            - (False, error_message) if value is invalid

    Example:
        >>> validate_range(0.5, 0.0, 1.0, "p", lower_inclusive=False)
        (True, None)
    """
    is_valid, error_msg = validate_number(value, name, context)
    if not is_valid:
        return is_valid, error_msg

    interval = "{}{}, {}{}".format(
        "[" if lower_inclusive and lower is not None else "(",
        "-inf" if lower is None else lower,
        "inf" if upper is None else upper,
        "]" if upper_inclusive and upper is not None else ")",
    )

    # Step 1: Check the lower end
    if lower is not None:
        if value < lower or (value == lower and not lower_inclusive):
            return _reject(f"{name} must lie in {interval}, got: {value}", context)

    # Step 2: Check the upper end
    if upper is not None:
        if value > upper or (value == upper and not upper_inclusive):
            return _reject(f"{name} must lie in {interval}, got: {value}", context)

    return True, None


def validate_positive_integer(value: int, min_value: int = 1, max_value: Optional[int] = None, context: str = "") -> Tuple[bool, Optional[str]]:
    """
    Validate that a value is a positive integer within specified range.

    Args:
        value (int): The value to validate
        min_value (int): Minimum allowed value (default: 1)
        max_value (Optional[int]): Maximum allowed value (None = no limit)
        context (str): Optional context string for logging (e.g., function name)

    Returns:
        Tuple[bool, Optional[str]]:
            - (True, None) if value is valid
            - (False, error_message) if value is invalid

    Example:
        >>> is_valid, error = validate_positive_integer(5, min_value=1, max_value=100)
        >>> if not is_valid:
        ...     print(error)
    """
    # Step 1: Check if value is an integer
    if isinstance(value, bool) or not isinstance(value, int):
        return _reject(f"Value must be an integer, got {type(value).__name__}: {value}", context)

    # Step 2: Check if value is at least min_value
    if value < min_value:
        return _reject(f"Value must be >= {min_value}, got: {value}", context)

    # Step 3: Check if value exceeds max_value (if specified)
    if max_value is not None and value > max_value:
        return _reject(f"Value must be <= {max_value}, got: {value}", context)

    return True, None


def validate_sorted_grid(values: Sequence[float], name: str = "grid", context: str = "") -> Tuple[bool, Optional[str]]:
    """
    Validate a non-empty, strictly increasing grid of non-negative numbers.

    Used for the delay and queue grids on which tails are evaluated.
    """
    if len(values) == 0:
        return _reject(f"{name} must not be empty", context)

    for value in values:
        is_valid, error_msg = validate_non_negative_float(value, name, context)
        if not is_valid:
            return is_valid, error_msg

    for previous, current in zip(values, values[1:]):
        if current <= previous:
            return _reject(f"{name} must be strictly increasing, got {previous} then {current}", context)

    return True, None
