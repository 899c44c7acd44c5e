"""Pydantic models for the braidforge JSON files (bundles, reports)."""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

logger = logging.getLogger(__name__)


class BundleError(ValueError):
    """Missing, unreadable or malformed JSON file."""


class TokenModel(BaseModel):
    kind: Literal["sigma", "rho"]
    index: int = Field(ge=1)
    sign: Literal[1, -1] = 1


class BraidModel(BaseModel):
    model_config = ConfigDict(extra="allow")

    strands: int = Field(ge=1)
    tokens: List[TokenModel] = Field(default_factory=list)
    type: Optional[Literal["loop", "classical"]] = None


class TrigPolyModel(BaseModel):
    const: float = 0.0
    cos: List[float] = Field(default_factory=list)
    sin: List[float] = Field(default_factory=list)


class TermModel(BaseModel):
    exp: List[int]
    re: float
    im: float = 0.0


class PolynomialModel(BaseModel):
    vars: List[str]
    terms: List[TermModel] = Field(default_factory=list)

    @field_validator("terms")
    @classmethod
    def _widths(cls, terms: List[TermModel], info) -> List[TermModel]:
        width = len(info.data.get("vars", []))
        for term in terms:
            if len(term.exp) != width:
                raise ValueError(f"exponent row {term.exp} does not match {width} variables")
        return terms


class EventModel(BaseModel):
    time: float
    pair: List[List[int]]
    interval: int
    classification: str
    sign: int = 0


class StrandSystemModel(BaseModel):
    kind: Literal["classical", "loop"]
    decomposition: Dict[str, Any]
    F: Dict[str, TrigPolyModel]
    G: Dict[str, TrigPolyModel]
    H: Dict[str, TrigPolyModel] = Field(default_factory=dict)
    R: Dict[str, TrigPolyModel] = Field(default_factory=dict)
    epsilon: float = 1.0
    clearance: Optional[float] = None
    lane_order: str = "descending"
    attempts: int = 1
    events: List[EventModel] = Field(default_factory=list)
    word: Optional[BraidModel] = None


class HolomorphicModel(BaseModel):
    numerator: PolynomialModel
    powers: Dict[str, int] = Field(default_factory=dict)


class SatelliteModel(BraidModel):
    lam: Optional[float] = Field(default=None, alias="lambda")


class BundleModel(BaseModel):
    """A construction bundle as written by ``braidforge build``."""

    model_config = ConfigDict(extra="allow", populate_by_name=True)

    algorithm: Literal["classical", "loop", "holomorphic", "spin", "torus", "satellite"]
    lam: float = Field(default=1.0, alias="lambda", gt=0)
    n: int = 0
    word: Optional[BraidModel] = None
    system: Optional[StrandSystemModel] = None
    degrees: Dict[str, Any] = Field(default_factory=dict)
    within_bound: Optional[bool] = None
    notes: List[str] = Field(default_factory=list)
    lambda_evidence: Optional[Dict[str, Any]] = None
    g: Optional[PolynomialModel] = None
    f: Optional[PolynomialModel] = None
    ftilde: Optional[HolomorphicModel] = None
    bounds: Optional[Dict[str, Any]] = None
    satellite_parts: Dict[str, PolynomialModel] = Field(default_factory=dict)
    satellites: Dict[str, SatelliteModel] = Field(default_factory=dict)
    torus_components: List[Dict[str, Any]] = Field(default_factory=list)


class CheckModel(BaseModel):
    name: str
    status: Literal["PASS", "FAIL", "SKIPPED"]
    message: str = ""
    advisory: bool = False
    details: Dict[str, Any] = Field(default_factory=dict)


class ReportModel(BaseModel):
    algorithm: str
    lam: Optional[float] = Field(default=None, alias="lambda")
    delta: Optional[float] = None
    status: Literal["PASS", "FAIL"]
    checks: List[CheckModel] = Field(default_factory=list)


def read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise BundleError(f"no such file: {path}") from e
    except (OSError, json.JSONDecodeError) as e:
        raise BundleError(f"cannot read {path}: {e}") from e


def write_json(path: Union[str, Path], data: Any) -> Path:
    """Write with a fixed layout so equal inputs give byte-identical files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    logger.debug("Wrote %s", path)
    return path


def validate_bundle(data: Any) -> BundleModel:
    try:
        return BundleModel.model_validate(data)
    except ValidationError as e:
        raise BundleError(f"malformed bundle: {e.error_count()} problem(s); first: {e.errors()[0]['msg']} at {e.errors()[0]['loc']}") from e


def load_bundle(path: Union[str, Path]) -> Dict[str, Any]:
    """Read and validate a bundle; returns the raw dict for ``ConstructionResult.from_bundle``."""
    data = read_json(path)
    model = validate_bundle(data)
    if model.g is None and model.f is None:
        raise BundleError(f"{path}: bundle holds neither g nor f")
    return data


def validate_report(data: Any) -> ReportModel:
    try:
        return ReportModel.model_validate(data)
    except ValidationError as e:
        raise BundleError(f"malformed report: {e.errors()[0]['msg']}") from e


def load_braid(path: Union[str, Path]) -> BraidModel:
    data = read_json(path)
    try:
        return BraidModel.model_validate(data)
    except ValidationError as e:
        raise BundleError(f"malformed braid file {path}: {e.errors()[0]['msg']}") from e
