# Copyright 2022 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Exceptions raised by the toolkit.

Input errors are caller mistakes (bad parameters, energies outside the
annulus, malformed scenarios). Numerical errors mean the computation itself
could not meet its tolerances.
"""

from typing import Optional, Sequence

import numpy as np


class MelnikovError(Exception):
    """Base class of every error raised by the toolkit."""


class InputError(MelnikovError, ValueError):
    """The caller asked for something that is not defined."""


class NumericalError(MelnikovError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance."""


# Input errors.


class NotAnEquilibrium(InputError):
    pass


class NoCenter(InputError):
    pass


class EnergyOutOfRange(InputError):
    pass


class DomainViolation(InputError):
    pass


class InvalidSpeed(InputError):
    pass


class InvalidParams(InputError):
    pass


class ZeroDispersion(InputError):
    pass


class NoPeriodAnnulus(InputError):
    pass


class DuplicateWeight(InputError):
    pass


class TargetOutOfRange(InputError):
    pass


class SchemaError(InputError):
    """A scenario document does not follow the schema."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f'{field}: {message}'
        super().__init__(message)


# Numerical errors.


class BracketFailure(NumericalError):
    pass


class BranchSolveFailure(NumericalError):
    pass


class ToleranceNotMet(NumericalError):

    def __init__(self, message: str, h: Optional[float] = None):
        self.h = h
        super().__init__(message)


class AmbiguousSignChange(NumericalError):

    def __init__(self, message: str, bracket=None):
        self.bracket = bracket
        super().__init__(message)


class IllConditioned(NumericalError):
    """Collocation failed; carries the matrix and the verification residuals."""

    def __init__(self,
                 message: str,
                 matrix: Optional[np.ndarray] = None,
                 condition_number: Optional[float] = None,
                 residuals: Optional[Sequence[float]] = None):
        self.matrix = matrix
        self.condition_number = condition_number
        self.residuals = list(residuals) if residuals is not None else []
        super().__init__(message)


class EscapedAnnulus(NumericalError):
    pass


class OrderOverflow(NumericalError):
    pass
