"""Separable lift of the one-dimensional pipelines to several coordinates.

A separable function is an ordered tuple of one-dimensional convex
functions, one per coordinate; every operation factors coordinatewise,
so conjugation and prox reduce to loops.  There is deliberately no
cross-coordinate coupling anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

from .assumptions import AssumptionEnv
from .errors import DimensionMismatch, ToolkitError
from .monop import SetValue, eval_op, prox
from .pwf import PiecewiseFunction, parse_pwf


@dataclass(frozen=True)
class SeparableFunction:
    """f(x) = sum of f_j(x_j); each coordinate validates on its own."""

    coordinates: tuple[PiecewiseFunction, ...]

    def __len__(self) -> int:
        return len(self.coordinates)

    def __iter__(self):
        return iter(self.coordinates)


def _tag_coordinate(j: int, exc: ToolkitError) -> ToolkitError:
    """Prefix the failing coordinate index onto an in-flight error."""
    if exc.args:
        exc.args = (f"coordinate {j}: {exc.args[0]}",) + exc.args[1:]
    else:
        exc.args = (f"coordinate {j}",)
    return exc


def parse_separable(text: str, env: AssumptionEnv | None = None) -> SeparableFunction:
    """Parse ';;'-separated coordinate functions into a separable bundle."""
    env = env if env is not None else AssumptionEnv.empty()
    coords = []
    for j, chunk in enumerate(text.split(";;")):
        try:
            coords.append(parse_pwf(chunk.strip(), env))
        except ToolkitError as exc:
            raise _tag_coordinate(j, exc)
    return SeparableFunction(tuple(coords))


def separable_conjugate(f: SeparableFunction) -> SeparableFunction:
    """Coordinatewise Fenchel conjugate."""
    from .conv import conjugate

    out = []
    for j, fj in enumerate(f.coordinates):
        try:
            out.append(conjugate(fj))
        except ToolkitError as exc:
            raise _tag_coordinate(j, exc)
    return SeparableFunction(tuple(out))


def separable_prox(f: SeparableFunction, lam, x) -> tuple[SetValue, ...]:
    """Prox of the sum, evaluated at the vector x, coordinate by coordinate."""
    xs = tuple(x)
    if len(xs) != len(f.coordinates):
        raise DimensionMismatch(
            f"point has {len(xs)} coordinates but the function has {len(f.coordinates)}"
        )
    out = []
    for j, (fj, xj) in enumerate(zip(f.coordinates, xs)):
        try:
            out.append(eval_op(prox(fj, lam), xj))
        except ToolkitError as exc:
            raise _tag_coordinate(j, exc)
    return tuple(out)
