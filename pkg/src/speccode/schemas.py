"""Configuration schemas for the command-line tools.

Every document is validated before anything runs; unknown keys are errors.
"""

from __future__ import annotations

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Tolerances(Strict):
    scalar: float = Field(1e-9, gt=0, description="scalar-on-code test, relative")


class Common(Strict):
    seed: int = 0
    tol: Tolerances = Tolerances()


class ClassicalSpec(Strict):
    kind: Literal["classical"]
    n: int = Field(ge=1, le=14)
    generators: list[list[int]] = Field(min_length=1)


class StabilizerSpec(Strict):
    kind: Literal["stabilizer"]
    n: int = Field(ge=1, le=12)
    generators: list[str] = Field(min_length=1)


class GKPSpec(Strict):
    kind: Literal["gkp"]
    M: int = Field(ge=4, le=32)


class ToricSpec(Strict):
    kind: Literal["toric"]
    Lx: int = Field(ge=2)
    Ly: int = Field(ge=2)


class RandomCodeSpec(Strict):
    kind: Literal["random"]
    dim: int = Field(ge=2, le=256)
    rank: int = Field(ge=1)


QubitCodeSpec = Annotated[Union[ClassicalSpec, StabilizerSpec, RandomCodeSpec], Field(discriminator="kind")]


class ClassicalCodeConfig(Common, ClassicalSpec):
    pass


class StabilizerCodeConfig(Common, StabilizerSpec):
    pass


class GKPCodeConfig(Common, GKPSpec):
    pass


class ToricCodeConfig(Common, ToricSpec):
    pass


CodeConfig = Annotated[
    Union[ClassicalCodeConfig, StabilizerCodeConfig, GKPCodeConfig, ToricCodeConfig],
    Field(discriminator="kind"),
]


class PauliNoise(Strict):
    kind: Literal["pauli"]
    errors: list[str] = Field(min_length=1)


class RandomNoise(Strict):
    kind: Literal["random"]
    count: int = Field(ge=1, le=64)


NoiseSpec = Annotated[Union[PauliNoise, RandomNoise], Field(discriminator="kind")]


class ThresholdConfig(Common):
    code: QubitCodeSpec
    noise: NoiseSpec
    thetas: list[float] = Field(min_length=4)
    decoder: Literal["petz", "poor", "petz_expectation"] = "petz"
    factorization: Optional[tuple[int, int]] = None
    theta0: Optional[float] = Field(None, gt=0)

    @field_validator("thetas")
    @classmethod
    def _grid(cls, v):
        if any(t <= 0 or t > 0.1 for t in v):
            raise ValueError("every theta must lie in (0, 0.1]")
        if sorted(set(v)) != list(v):
            raise ValueError("theta grid must be strictly ascending")
        return v


class FluctuationConfig(Common):
    code: StabilizerSpec
    error: str
    theta: float = Field(gt=0, le=1)
    lambdas: list[float] = Field(min_length=1)
    mode: Literal["normalized", "raw"] = "normalized"

    @field_validator("lambdas")
    @classmethod
    def _nonneg(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("lambda values must be >= 0")
        return v


class PolynomialFunction(Strict):
    terms: list[tuple[int, int, int, float]] = Field(min_length=1, description="x^a y^b z^c coefficient rows")


FunctionSpec = Union[Literal["x", "y", "z", "one", "bump_north", "bump_south"], PolynomialFunction]


class BTConfig(Common):
    p_list: list[int] = Field(min_length=3)
    f: FunctionSpec = "z"
    g: FunctionSpec = "z"
    kl_pair: tuple[FunctionSpec, FunctionSpec] = ("bump_north", "bump_south")
    hbar_scale: Optional[float] = Field(None, gt=0)
    q_extra: int = Field(8, ge=4)

    @field_validator("p_list")
    @classmethod
    def _ascending(cls, v):
        if any(p < 1 for p in v) or sorted(set(v)) != list(v):
            raise ValueError("p_list must be strictly ascending positive integers")
        return v


class GroupSpec(Strict):
    kind: Literal["bits", "symplectic", "torus"]
    n: int = Field(ge=1)


class DistanceConfig(Common):
    group: GroupSpec
    weight: Optional[Literal["hamming", "pauli", "manhattan"]] = None
    general: bool = True
    pairs: Optional[list[tuple[list[int], list[int]]]] = None
