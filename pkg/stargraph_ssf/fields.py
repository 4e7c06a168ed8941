"""Annotated field types shared by the result models.

`Complex`:
    a complex number serialized to JSON as a `[re, im]` pair.
`RealArray`:
    a numpy array of floats serialized to JSON as a list.
`ComplexArray`:
    a numpy array of complex values serialized to JSON as a list of pairs.
"""

from __future__ import annotations

from typing import Annotated, Any, List

import numpy as np
from pydantic import BeforeValidator, PlainSerializer


def complex_pair(value: complex) -> List[float]:
    """Serialize a complex number as `[re, im]`."""
    return [float(value.real), float(value.imag)]


def _as_real_array(value: Any) -> np.ndarray:
    return np.asarray(value, dtype=float)


def _as_complex_array(value: Any) -> np.ndarray:
    array = np.asarray(value)
    if array.ndim >= 1 and array.shape[-1:] == (2,) and not np.iscomplexobj(array):
        return array[..., 0] + 1j * array[..., 1]
    return array.astype(complex)


Complex = Annotated[complex, PlainSerializer(complex_pair, when_used="json")]

RealArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_real_array),
    PlainSerializer(lambda a: [float(v) for v in a.ravel()], when_used="json"),
]

ComplexArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_complex_array),
    PlainSerializer(lambda a: [complex_pair(v) for v in a.ravel()], when_used="json"),
]
