"""Multi-cell experiment designs, cost curves, and budget-to-propensity planning.

A design is a list of cells; each cell randomly splits its units into an
eligible share (who may be exposed, with per-cell propensity nu_c) and an
ineligible remainder (never exposed).  The structural requirements are:

  1. every eligibility share strictly inside (0, 1);
  2. every propensity strictly inside (0, 1);
  3. propensities pairwise distinct (the moment matrices in the estimation
     stage become singular as two propensities coincide, so a minimum gap
     of 1e-6 is enforced rather than exact inequality).

Budget planning follows the effective-budget-per-user arithmetic: cell c
receives budget share sigma_c of the total B, spread over its eligible users,
so the per-user budget is

    B_c_eff = sigma_c * B / (Pr(Z_c=1 | C=c) * Pr(C=c))

and the induced propensity is kappa^{-1}(B_c_eff) for the audience-normalized
cost curve kappa.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import DesignError, DomainError, InfeasibleBudgetError, InputError

MIN_PROPENSITY_GAP = 1e-6
SHARE_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Cell:
    assign_share: float          # Pr(C = c)
    elig_share: float            # Pr(Z_c = 1 | C = c)
    propensity: float            # nu(Z_c = 1)
    budget_share: float | None = None  # sigma_c, optional

    def __post_init__(self):
        for name in ("assign_share", "elig_share", "propensity"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InputError(f"cell {name} must be finite")


@dataclass(frozen=True)
class CellDesign:
    cells: tuple[Cell, ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        if not self.cells:
            raise InputError("design needs at least one cell")

    @property
    def propensities(self) -> list[float]:
        return [c.propensity for c in self.cells]


@dataclass(frozen=True)
class CostSpec:
    """Cost kappa(nu) of reaching a fraction nu of the audience.

    kind="power" means kappa(nu) = scale * nu ** exponent; kind="tabulated"
    interpolates linearly through strictly increasing (nu, cost) points
    anchored at kappa(0) = 0.
    """

    kind: str
    scale: float | None = None
    exponent: float | None = None
    points: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind == "power":
            if self.scale is None or self.exponent is None:
                raise InputError("power cost needs scale and exponent")
            if not (self.scale > 0 and self.exponent >= 1):
                raise InputError("power cost requires scale > 0 and exponent >= 1")
        elif self.kind == "tabulated":
            if not self.points:
                raise InputError("tabulated cost needs (nu, cost) points")
            pts = tuple((float(a), float(b)) for a, b in self.points)
            if pts[0] != (0.0, 0.0):
                pts = ((0.0, 0.0),) + pts
            for (n0, c0), (n1, c1) in zip(pts, pts[1:]):
                if not (n1 > n0 and c1 > c0):
                    raise InputError("tabulated cost must be strictly increasing")
            if pts[-1][0] < 1.0:
                raise InputError("tabulated cost must cover nu up to 1")
            object.__setattr__(self, "points", pts)
        else:
            raise InputError(f"unknown cost kind {self.kind!r}")


def kappa(cost: CostSpec, nu: float) -> float:
    """Evaluate the cost curve at reach nu."""
    if not 0.0 <= nu <= 1.0:
        raise DomainError("nu must lie in [0, 1]")
    if cost.kind == "power":
        return cost.scale * nu ** cost.exponent
    xs = [p[0] for p in cost.points]
    ys = [p[1] for p in cost.points]
    for (x0, y0), (x1, y1) in zip(cost.points, cost.points[1:]):
        if nu <= x1:
            return y0 + (y1 - y0) * (nu - x0) / (x1 - x0)
    return ys[-1]


def kappa_inverse(cost: CostSpec, b: float) -> float:
    """The reach nu with kappa(nu) = b; errors above kappa(1)."""
    if b < 0:
        raise DomainError("budget must be nonnegative")
    top = kappa(cost, 1.0)
    if b > top:
        raise InfeasibleBudgetError(
            f"per-user budget {b:g} exceeds kappa(1) = {top:g}: cannot expose "
            "more than 100% of the audience")
    if cost.kind == "power":
        return (b / cost.scale) ** (1.0 / cost.exponent)
    for (x0, y0), (x1, y1) in zip(cost.points, cost.points[1:]):
        if b <= y1:
            return x0 + (x1 - x0) * (b - y0) / (y1 - y0)
    return 1.0


def validate_design(design: CellDesign) -> list[str]:
    """Return every violated structural clause (empty list means valid)."""
    violations = []
    cells = design.cells
    total = sum(c.assign_share for c in cells)
    if abs(total - 1.0) > SHARE_SUM_TOL:
        violations.append(f"assignment shares sum to {total!r}, not 1")
    for i, c in enumerate(cells):
        if not 0.0 < c.assign_share <= 1.0:
            violations.append(f"cell {i}: assign_share {c.assign_share!r} outside (0, 1]")
        if not 0.0 < c.elig_share < 1.0:
            violations.append(f"cell {i}: eligibility share {c.elig_share!r} must be "
                              "strictly inside (0, 1)")
        if not 0.0 < c.propensity < 1.0:
            violations.append(f"cell {i}: propensity {c.propensity!r} must be "
                              "strictly inside (0, 1)")
    for i, a in enumerate(cells):
        for j in range(i + 1, len(cells)):
            if abs(a.propensity - cells[j].propensity) < MIN_PROPENSITY_GAP:
                violations.append(
                    f"cells {i} and {j}: propensities {a.propensity!r} and "
                    f"{cells[j].propensity!r} closer than {MIN_PROPENSITY_GAP}")
    shares = [c.budget_share for c in cells]
    if any(s is not None for s in shares):
        if any(s is None for s in shares):
            violations.append("budget shares must be given for all cells or none")
        else:
            ssum = sum(shares)
            if abs(ssum - 1.0) > SHARE_SUM_TOL:
                violations.append(f"budget shares sum to {ssum!r}, not 1")
    return violations


def plan_budget(total_budget: float, cost: CostSpec,
                cells: list[dict]) -> CellDesign:
    """Fill per-cell propensities from a budget split.

    Each entry of `cells` carries budget_share (sigma_c), elig_share, and
    optionally assign_share (uniform 1/C when omitted).  The audience size is
    normalized to 1, so sigma_c * B spread over the cell's eligible users
    gives the per-user budget that the cost curve converts into a propensity.
    """
    if total_budget <= 0:
        raise InputError("total budget must be positive")
    n = len(cells)
    if n == 0:
        raise InputError("need at least one cell")
    out = []
    effective = []
    for i, spec in enumerate(cells):
        sigma = float(spec["budget_share"])
        elig = float(spec["elig_share"])
        assign = float(spec.get("assign_share", 1.0 / n))
        if not 0.0 < sigma <= 1.0:
            raise DesignError(f"cell {i}: budget share {sigma!r} outside (0, 1]")
        b_eff = sigma * total_budget / (elig * assign)
        effective.append(b_eff)
        nu = kappa_inverse(cost, b_eff)
        out.append(Cell(assign_share=assign, elig_share=elig, propensity=nu,
                        budget_share=sigma))
    for i in range(n):
        for j in range(i + 1, n):
            if abs(effective[i] - effective[j]) < SHARE_SUM_TOL:
                raise DesignError(
                    f"cells {i} and {j} have coincident effective budgets "
                    f"({effective[i]:g}): requires sigma_c/(Pr(Z_c=1|C=c) x Pr(C=c)) "
                    "to differ across cells")
    design = CellDesign(tuple(out))
    problems = validate_design(design)
    if problems:
        raise DesignError("; ".join(problems))
    return design


# --- JSON schema -----------------------------------------------------------
# {"cells": [{"assign_share": ..., "elig_share": ..., "propensity": ...,
#             "budget_share": ...}, ...], "cost": {"kind": ...}}

def cost_to_dict(cost: CostSpec) -> dict:
    if cost.kind == "power":
        return {"kind": "power", "scale": cost.scale, "exponent": cost.exponent}
    return {"kind": "tabulated", "points": [list(p) for p in cost.points]}


def cost_from_dict(data: dict) -> CostSpec:
    try:
        if data["kind"] == "power":
            return CostSpec("power", scale=float(data["scale"]),
                            exponent=float(data["exponent"]))
        if data["kind"] == "tabulated":
            return CostSpec("tabulated",
                            points=tuple((float(a), float(b)) for a, b in data["points"]))
    except KeyError as exc:
        raise InputError(f"cost spec missing field {exc}") from exc
    raise InputError(f"unknown cost kind {data['kind']!r}")


def design_to_dict(design: CellDesign, cost: CostSpec | None = None) -> dict:
    cells = []
    for c in design.cells:
        entry = {"assign_share": c.assign_share, "elig_share": c.elig_share,
                 "propensity": c.propensity}
        if c.budget_share is not None:
            entry["budget_share"] = c.budget_share
        cells.append(entry)
    out = {"cells": cells}
    if cost is not None:
        out["cost"] = cost_to_dict(cost)
    return out


def design_from_dict(data: dict) -> CellDesign:
    try:
        cells = tuple(
            Cell(assign_share=float(c["assign_share"]),
                 elig_share=float(c["elig_share"]),
                 propensity=float(c["propensity"]),
                 budget_share=(float(c["budget_share"])
                               if c.get("budget_share") is not None else None))
            for c in data["cells"])
    except KeyError as exc:
        raise InputError(f"design spec missing field {exc}") from exc
    return CellDesign(cells)


def load_design(path) -> CellDesign:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from exc
    return design_from_dict(data)


def save_design(design: CellDesign, path, cost: CostSpec | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(design_to_dict(design, cost), fh, indent=2, sort_keys=True)
        fh.write("\n")
