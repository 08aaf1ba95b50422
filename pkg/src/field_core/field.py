"""
Exact arithmetic over a prime field F_q.

Field elements are galois ``FieldArray`` objects; a single element is a 0-d
array. All matrices and vectors handed between protocol parties are arrays of
the same field class, obtained through :func:`field_class` so that every part
of the code shares one class per modulus.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple, Type

import galois
import numpy as np

from src.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_MODULUS = 2147483647

# A single field element is a 0-d FieldArray.
FieldElement = galois.FieldArray


class FieldError(Exception):
    """
    Base exception for finite-field arithmetic failures.
    """

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class FieldDivisionError(FieldError, ZeroDivisionError):
    pass


class DimensionMismatchError(FieldError, ValueError):
    pass


class SingularMatrixError(FieldError):
    """
    Raised when a linear system has no unique solution. Carries the rank found.
    """

    def __init__(self, rank: int, size: int):
        super().__init__(f"Matrix is singular: rank {rank} < {size}")
        self.rank = rank
        self.size = size


@lru_cache(maxsize=None)
def field_class(q: int) -> Type[galois.FieldArray]:
    """Returns the galois field class for the prime q."""
    if not galois.is_prime(q):
        raise FieldError(f"Field modulus {q} is not prime")
    return galois.GF(q)


@dataclass(frozen=True)
class FieldConfig:
    """
    The prime modulus together with the globally known distinct constants
    f_1..f_ell and alpha_1..alpha_N.
    """
    q: int
    f: Tuple[int, ...]
    alpha: Tuple[int, ...]

    @classmethod
    def default(cls, ell: int, N: int, q: int = DEFAULT_MODULUS) -> "FieldConfig":
        return cls(q=q, f=tuple(range(1, ell + 1)), alpha=tuple(range(ell + 1, ell + N + 1)))

    @property
    def GF(self) -> Type[galois.FieldArray]:
        return field_class(self.q)

    @property
    def ell(self) -> int:
        return len(self.f)

    @property
    def N(self) -> int:
        return len(self.alpha)

    def validate(self) -> List[str]:
        """Returns every violated constraint; an empty list means valid."""
        errors: List[str] = []
        if not galois.is_prime(self.q):
            errors.append(f"q={self.q} must be prime")
        if self.q <= self.ell + self.N:
            errors.append(f"q must exceed ell + N (q={self.q}, ell + N={self.ell + self.N})")
        constants = list(self.f) + list(self.alpha)
        out_of_range = [c for c in constants if not 0 <= c < self.q]
        if out_of_range:
            errors.append(f"constants must lie in [0, q): {out_of_range}")
        if len(set(constants)) != len(constants):
            errors.append("f and alpha constants must be pairwise distinct")
        return errors

    def f_elements(self) -> galois.FieldArray:
        return self.GF(list(self.f))

    def alpha_element(self, n: int) -> galois.FieldArray:
        """alpha_n for the 1-based database index n."""
        if not 1 <= n <= self.N:
            raise FieldError(f"Database index {n} outside 1..{self.N}")
        return self.GF(self.alpha[n - 1])

    def gamma_inverse(self, n: int) -> galois.FieldArray:
        """Diagonal of Gamma_n^{-1}: (f_1 - alpha_n, ..., f_ell - alpha_n)."""
        return self.f_elements() - self.alpha_element(n)

    def gamma(self, n: int) -> galois.FieldArray:
        """Diagonal of Gamma_n: 1/(f_i - alpha_n)."""
        return np.reciprocal(self.gamma_inverse(n))


def field_inv(a: FieldElement) -> FieldElement:
    if int(a) == 0:
        raise FieldDivisionError("Cannot invert 0 in a field")
    return np.reciprocal(a)


def mat_mul(A: galois.FieldArray, B: galois.FieldArray) -> galois.FieldArray:
    """
    Exact matrix product over the field. 1-d operands are treated as a row
    (left) or a column (right) vector and the result is flattened back.
    """
    if type(A) is not type(B):
        raise DimensionMismatchError("Operands belong to different fields")
    left = A.reshape(1, -1) if A.ndim == 1 else A
    right = B.reshape(-1, 1) if B.ndim == 1 else B
    if left.shape[1] != right.shape[0]:
        raise DimensionMismatchError(
            f"Inner dimensions do not agree: {tuple(A.shape)} x {tuple(B.shape)}"
        )
    product = left @ right
    if A.ndim == 1 and B.ndim == 1:
        return product[0, 0]
    if A.ndim == 1:
        return product[0]
    if B.ndim == 1:
        return product[:, 0]
    return product


def dot(a: galois.FieldArray, b: galois.FieldArray) -> FieldElement:
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatchError(f"Cannot take dot product of {tuple(a.shape)} and {tuple(b.shape)}")
    return mat_mul(a, b)


def solve_linear(A: galois.FieldArray, b: galois.FieldArray) -> galois.FieldArray:
    """
    Solves A x = b over F_q for square A.

    Raises:
        SingularMatrixError: if A is rank deficient; the rank is attached.
    """
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"Expected a square matrix, got {tuple(A.shape)}")
    if b.shape[0] != A.shape[0]:
        raise DimensionMismatchError(f"Right-hand side of length {b.shape[0]} for a {A.shape[0]}x{A.shape[0]} system")

    size = A.shape[0]
    rank = int(np.linalg.matrix_rank(A))
    if rank < size:
        logger.error(f"Linear system is singular (rank {rank} of {size})")
        raise SingularMatrixError(rank, size)

    return mat_mul(np.linalg.inv(A), b)


def as_ints(values: galois.FieldArray) -> list:
    """Plain Python integers (nested lists for matrices) for serialization."""
    return values.view(np.ndarray).tolist()
