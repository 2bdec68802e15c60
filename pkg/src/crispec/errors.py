"""Exception types shared across the package."""

from __future__ import annotations


class CrispecError(Exception):
    """Base class; the CLI maps these to exit code 1."""


class InputError(CrispecError):
    pass


class AsymmetricMatrix(InputError):
    def __init__(self, i: int, j: int, a: float, b: float):
        self.i, self.j = i, j
        super().__init__(f"dist[{i}][{j}]={a!r} differs from dist[{j}][{i}]={b!r}")


class NegativeDistance(InputError):
    def __init__(self, i: int, j: int, value: float):
        self.i, self.j, self.value = i, j, value
        super().__init__(f"dist[{i}][{j}]={value!r} is not a positive distance")


class TriangleViolation(InputError):
    def __init__(self, i: int, j: int, k: int, slack: float):
        self.i, self.j, self.k, self.slack = i, j, k, slack
        super().__init__(
            f"d({i},{j}) exceeds d({i},{k}) + d({k},{j}) by {slack!r}")


class MeshTooCoarse(InputError):
    pass


class InvalidChain(InputError):
    pass


class LeftBall(CrispecError):
    """A lift or deck translate left the explored part of a cover ball."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"lift left the explored ball at chain index {index}")


class BudgetExhausted(CrispecError):
    pass


class ConsistencyFailure(CrispecError):
    """An internal cross-check failed; indicates a bug."""
