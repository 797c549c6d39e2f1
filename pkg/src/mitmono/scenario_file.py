"""JSON scenario documents: schema, parsing, rendering and result serialization."""
from __future__ import annotations

import hashlib
import json
from typing import Optional

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator

from .errors import ValidationError
from .geometry import (
    CellSet,
    Coil,
    CoilSet,
    GridSpec,
    ResistivityMap,
    Scenario,
    cover_with_test_elements,
)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSection(_Strict):
    nx: int = Field(ge=2)
    ny: int = Field(ge=2)
    h: PositiveFloat
    d: PositiveFloat
    origin: tuple[float, float] = (0.0, 0.0)
    wire_radius: Optional[PositiveFloat] = None


class InclusionSection(_Strict):
    cells: Optional[tuple[int, ...]] = None
    rect: Optional[tuple[int, int, PositiveInt, PositiveInt]] = None  # ix0, iy0, width, height
    value: PositiveFloat

    @model_validator(mode="after")
    def _one_support(self):
        if (self.cells is None) == (self.rect is None):
            raise ValueError("give exactly one of 'cells' or 'rect'")
        return self


class ResistivitySection(_Strict):
    background: PositiveFloat
    inclusions: tuple[InclusionSection, ...] = ()


class CoilSection(_Strict):
    vertices: tuple[tuple[float, float, float], ...]
    orientation: int = 1


class CoverSection(_Strict):
    block_w: PositiveInt
    block_h: PositiveInt
    stride: PositiveInt = 1


class RunSection(_Strict):
    lambda_samples: Optional[tuple[float, ...]] = None
    n_lambda: PositiveInt = 8
    lambda_star: Optional[float] = None
    tol: Optional[float] = Field(default=None, ge=0)  # relative to ||H_A(lambda)||_2
    seed: int = 0
    noise_delta: float = Field(default=0.0, ge=0)  # relative to ||H_A(lambda)||_2
    sign_convention_override: Optional[int] = None
    test_elements: CoverSection = CoverSection(block_w=1, block_h=1, stride=1)
    candidates: Optional[CoverSection] = None

    @model_validator(mode="after")
    def _sign(self):
        if self.sign_convention_override not in (None, 1, -1):
            raise ValueError("sign_convention_override must be +1 or -1")
        return self


class ScenarioDocument(_Strict):
    grid: GridSection
    resistivity: ResistivitySection
    coils: tuple[CoilSection, ...] = Field(min_length=1)
    run: RunSection = RunSection()


def _loc(loc) -> str:
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


def parse_document(text: str) -> ScenarioDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"line {exc.lineno} column {exc.colno}: {exc.msg}", "document") from exc
    if not isinstance(raw, dict):
        raise ValidationError("top level must be an object", "document")
    try:
        return ScenarioDocument.model_validate(raw)
    except pydantic.ValidationError as exc:
        err = exc.errors()[0]
        raise ValidationError(err["msg"], _loc(err["loc"]) or "document") from exc


def render_document(doc: ScenarioDocument) -> str:
    return json.dumps(doc.model_dump(mode="json"), indent=2) + "\n"


def document_hash(doc: ScenarioDocument) -> str:
    canon = json.dumps(doc.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def inclusion_cells(doc: ScenarioDocument, grid: GridSpec):
    """``[(CellSet, value)]`` per inclusion; overlapping or duplicate cells are rejected."""
    seen = set()
    out = []
    for k, inc in enumerate(doc.resistivity.inclusions):
        field = f"resistivity.inclusions[{k}]"
        if inc.cells is not None:
            if len(set(inc.cells)) != len(inc.cells):
                raise ValidationError("duplicate inclusion cells", field + ".cells")
            cs = CellSet.of(inc.cells).validate_for(grid, field + ".cells")
        else:
            ix0, iy0, w, h = inc.rect
            if ix0 < 0 or iy0 < 0 or ix0 + w > grid.nx or iy0 + h > grid.ny:
                raise ValidationError("rectangle exceeds the grid", field + ".rect")
            cs = CellSet.rect(grid, ix0, iy0, w, h)
        dup = seen & set(cs.cells)
        if dup:
            raise ValidationError(f"duplicate inclusion cells {sorted(dup)}", field)
        seen |= set(cs.cells)
        out.append((cs, inc.value))
    return out


def build_scenario(doc: ScenarioDocument) -> Scenario:
    g = doc.grid
    grid = GridSpec(g.nx, g.ny, g.h, g.d, g.origin)
    if g.wire_radius is not None and not g.wire_radius < g.h / 2:
        raise ValidationError(f"must be below h/2 = {g.h / 2:g}", "grid.wire_radius")
    values = np.full(grid.n_cells, doc.resistivity.background)
    for cs, val in inclusion_cells(doc, grid):
        values[list(cs.cells)] = val
    coils = []
    for k, c in enumerate(doc.coils):
        try:
            coils.append(Coil(np.array(c.vertices, dtype=float), c.orientation))
        except ValidationError as exc:
            raise ValidationError(str(exc).split(": ", 1)[-1], f"coils[{k}]") from exc
    return Scenario(grid, ResistivityMap(values), CoilSet(tuple(coils)), g.wire_radius)


def anomaly_support(doc: ScenarioDocument, grid: GridSpec) -> CellSet:
    cells = set()
    for cs, _ in inclusion_cells(doc, grid):
        cells |= set(cs.cells)
    return CellSet.of(cells)


def contrast_value(doc: ScenarioDocument):
    """Inclusion resistivity shared by all inclusions, or None when absent or mixed."""
    vals = {inc.value for inc in doc.resistivity.inclusions}
    return vals.pop() if len(vals) == 1 else None


def parse_scenario(text: str, assembled=None):
    """Parse and validate a document into ``(Scenario, ImagingConfig | None)``.

    The imaging config is None when the document has no single inclusion
    resistivity above the background. Default lambda samples need the
    background pole, so the geometry is assembled here unless supplied.
    """
    from .assembly import assemble_geometry
    from .imaging import ImagingConfig, default_lambda_samples
    from .spectral import validity_domain

    doc = parse_document(text)
    scenario = build_scenario(doc)
    run = doc.run
    eta_i = contrast_value(doc)
    bg = doc.resistivity.background
    if eta_i is None or not eta_i > bg:
        return scenario, None
    lams = run.lambda_samples
    if lams is None:
        geo = assembled if assembled is not None else assemble_geometry(scenario)
        ops = geo.operators(ResistivityMap.uniform(scenario.grid, bg))
        lams = default_lambda_samples(validity_domain(ops.modes).lambda1, run.n_lambda)
    cover = run.test_elements
    elements = cover_with_test_elements(scenario.grid, cover.block_w, cover.block_h, cover.stride)
    tol = 0.0 if run.tol is None else run.tol  # relative; scaled by the caller
    config = ImagingConfig(bg, eta_i, tuple(lams), tol, tuple(elements), run.lambda_star)
    return scenario, config


# --- output formatting --------------------------------------------------------

def fmt_float(x) -> str:
    return format(float(x), ".16e")


def dumps_fixed(obj, indent=0) -> str:
    """JSON with insertion-ordered keys and 17-significant-digit floats."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps_fixed(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps_fixed(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps_fixed(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, np.ndarray):
        return dumps_fixed(obj.tolist(), indent)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not np.isfinite(obj):
            raise ValueError("non-finite value in output")
        return fmt_float(obj)
    return json.dumps(str(obj))


def csv_text(header, rows) -> str:
    def cell(v):
        if isinstance(v, (float, np.floating)):
            return fmt_float(v)
        return str(v)

    lines = [",".join(header)]
    lines += [",".join(cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"
