"""Parametric layered-penetration generator.

A deliberately simple, fully synthetic stand-in for a damage simulator: a
projectile loses energy linearly per meter of material (scaled by incidence
angle and its hardness-defeat rating), and the damage fraction of a buried
module is a logistic function of the energy remaining at the module's depth.
The law is closed-form, monotone in every physically sensible direction, and
deterministic, which is exactly what the learned layers are tested against.
None of the constants model any real munition, material, or facility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence


class PhysicsDomainError(ValueError):
    """Raised for inputs outside the generator's stated domain."""


class LayerMaterial(Enum):
    ReinforcedConcrete = "ReinforcedConcrete"
    Granite = "Granite"
    Cavity = "Cavity"


#: default energy absorbed per meter per unit penetration_class, MJ/m
DEFAULT_IMPEDANCE = {
    LayerMaterial.ReinforcedConcrete: 0.5,
    LayerMaterial.Granite: 0.3,
    LayerMaterial.Cavity: 0.0,
}

MAX_ANGLE_DEG = 85.0


@dataclass(frozen=True, slots=True)
class Munition:
    """Synthetic munition class; all quantities are invented scales."""

    id: int
    name: str
    mass_kg: float
    explosive_mass_kg: float
    impact_energy_mj: float
    penetration_class: float

    def __post_init__(self):
        for f in ("mass_kg", "explosive_mass_kg", "impact_energy_mj", "penetration_class"):
            if getattr(self, f) <= 0:
                raise PhysicsDomainError(f"munition {self.name!r}: {f} must be > 0")
        if self.explosive_mass_kg >= self.mass_kg:
            raise PhysicsDomainError(f"munition {self.name!r}: explosive_mass_kg must be < mass_kg")


@dataclass(frozen=True, slots=True)
class Layer:
    material: LayerMaterial
    thickness_m: float
    impedance: float  # MJ per meter per unit penetration_class

    def __post_init__(self):
        if self.thickness_m < 0:
            raise PhysicsDomainError("layer thickness must be >= 0")
        if self.material is LayerMaterial.Cavity and self.impedance != 0.0:
            raise PhysicsDomainError("cavity layers must have impedance 0")
        if self.impedance < 0:
            raise PhysicsDomainError("impedance must be >= 0")


@dataclass(frozen=True, slots=True)
class LayerStack:
    name: str
    layers: tuple[Layer, ...]

    def __post_init__(self):
        if not self.layers:
            raise PhysicsDomainError("a stack needs at least one layer")

    @property
    def total_thickness_m(self) -> float:
        return sum(l.thickness_m for l in self.layers)

    @property
    def total_absorption(self) -> float:
        """Vertical-path energy cost at penetration_class 1, MJ."""
        return sum(l.impedance * l.thickness_m for l in self.layers)


def make_stack(name: str, spec: Iterable[tuple[LayerMaterial, float]], impedances=None) -> LayerStack:
    imp = dict(DEFAULT_IMPEDANCE)
    if impedances:
        imp.update(impedances)
    return LayerStack(name, tuple(Layer(m, th, imp[m]) for m, th in spec))


@dataclass(frozen=True, slots=True)
class DamageReport:
    rd: float
    penetration_depth_m: float
    residual_energy_mj: float
    absorbed_per_layer: tuple[float, ...]

    def __post_init__(self):
        if not 0.0 <= self.rd <= 1.0:
            raise PhysicsDomainError(f"rd {self.rd} outside [0, 1]")
        if self.residual_energy_mj < 0:
            raise PhysicsDomainError("residual energy must be >= 0")


@dataclass(frozen=True, slots=True)
class DamageRule:
    """Logistic map from residual energy at the module to damage fraction."""

    k: float = 1.0
    e_half_mj: float = 3.0


def _logistic(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def simulate_penetration(
    munition: Munition,
    stack: LayerStack,
    angle_deg: float,
    module_depth_m: float,
    rule: DamageRule = DamageRule(),
) -> DamageReport:
    """Deterministic single-shot penetration against one buried module.

    The projectile travels 1/cos(angle) meters of material per meter of
    depth; layer i removes impedance_i * thickness_i * path / class MJ.
    Depth where energy hits zero is the penetration depth. Damage is
    logistic in the energy left at ``module_depth_m``, and exactly 0 when
    that depth is never reached.
    """
    if not 0.0 <= angle_deg <= MAX_ANGLE_DEG:
        raise PhysicsDomainError(f"angle {angle_deg} outside [0, {MAX_ANGLE_DEG}] degrees")
    if not 0.0 <= module_depth_m <= stack.total_thickness_m:
        raise PhysicsDomainError(
            f"module depth {module_depth_m} outside stack of {stack.total_thickness_m} m"
        )
    path = 1.0 / math.cos(math.radians(angle_deg))
    energy = munition.impact_energy_mj
    depth = 0.0
    absorbed: list[float] = []
    for layer in stack.layers:
        if energy <= 0.0:
            absorbed.append(0.0)
            continue
        cost_per_m = layer.impedance * path / munition.penetration_class
        layer_cost = cost_per_m * layer.thickness_m
        if layer_cost <= energy:
            absorbed.append(layer_cost)
            energy -= layer_cost
            depth += layer.thickness_m
        else:
            absorbed.append(energy)
            depth += energy / cost_per_m  # cost_per_m > 0 here
            energy = 0.0

    e_mod = _residual_energy_at(munition, stack, path, module_depth_m)
    reached = e_mod >= -1e-12
    rd = _logistic(rule.k * (max(e_mod, 0.0) - rule.e_half_mj)) if reached else 0.0
    return DamageReport(
        rd=rd,
        penetration_depth_m=min(depth, stack.total_thickness_m),
        residual_energy_mj=energy,
        absorbed_per_layer=tuple(absorbed),
    )


def _residual_energy_at(munition: Munition, stack: LayerStack, path: float, x: float) -> float:
    """Energy left at vertical depth ``x``; negative means the depth is unreached."""
    energy = munition.impact_energy_mj
    top = 0.0
    for layer in stack.layers:
        seg = min(layer.thickness_m, max(0.0, x - top))
        energy -= layer.impedance * path / munition.penetration_class * seg
        top += layer.thickness_m
        if top >= x or energy < 0.0:
            break
    return energy


def damage_by_module(
    munition: Munition,
    stack: LayerStack,
    angle_deg: float,
    module_depths: dict[str, float],
    rule: DamageRule = DamageRule(),
) -> dict[str, DamageReport]:
    return {
        name: simulate_penetration(munition, stack, angle_deg, depth, rule)
        for name, depth in module_depths.items()
    }


# ---------------------------------------------------------------------------
# label grid
# ---------------------------------------------------------------------------

def default_munitions() -> tuple[Munition, ...]:
    """Four synthetic classes, strictly increasing in energy and rating."""
    return (
        Munition(0, "light", 400.0, 120.0, 8.0, 0.8),
        Munition(1, "medium", 900.0, 300.0, 14.0, 1.0),
        Munition(2, "heavy", 2500.0, 800.0, 22.0, 1.3),
        Munition(3, "super", 6000.0, 1900.0, 32.0, 1.6),
    )


def default_stacks() -> tuple[LayerStack, ...]:
    rc, gr, cav = LayerMaterial.ReinforcedConcrete, LayerMaterial.Granite, LayerMaterial.Cavity
    return (
        make_stack("shallow_concrete", [(rc, 8.0)]),
        make_stack("layered_mixed", [(rc, 12.0), (gr, 25.0)]),
        make_stack("deep_granite", [(rc, 10.0), (gr, 45.0)]),
        make_stack("vaulted_cavity", [(rc, 15.0), (cav, 10.0), (gr, 30.0)]),
    )


DEFAULT_GRID_ANGLES = (0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0)


@dataclass(frozen=True, slots=True)
class LabelGrid:
    """Cartesian grid of configurations for label generation.

    Defaults give 4 munitions x 7 angles x 4 stacks = 112 rows.
    """

    munitions: tuple[Munition, ...] = field(default_factory=default_munitions)
    angles_deg: tuple[float, ...] = DEFAULT_GRID_ANGLES
    stacks: tuple[LayerStack, ...] = field(default_factory=default_stacks)
    rule: DamageRule = DamageRule()


@dataclass(frozen=True, slots=True)
class LabelRow:
    config_id: str
    munition: Munition
    angle_deg: float
    stack: LayerStack
    module_depth_m: float
    rd: float
    penetration_depth_m: float
    residual_energy_mj: float


def batch_labels(grid: LabelGrid = LabelGrid()) -> list[LabelRow]:
    """Full deterministic grid; module depth is the bottom of each stack."""
    if not (grid.munitions and grid.angles_deg and grid.stacks):
        raise PhysicsDomainError("label grid must have munitions, angles, and stacks")
    rows: list[LabelRow] = []
    for m in grid.munitions:
        for angle in grid.angles_deg:
            for stack in grid.stacks:
                depth = stack.total_thickness_m
                report = simulate_penetration(m, stack, angle, depth, grid.rule)
                rows.append(
                    LabelRow(
                        config_id=f"{m.name}|a{angle:g}|{stack.name}",
                        munition=m,
                        angle_deg=angle,
                        stack=stack,
                        module_depth_m=depth,
                        rd=report.rd,
                        penetration_depth_m=report.penetration_depth_m,
                        residual_energy_mj=report.residual_energy_mj,
                    )
                )
    return rows


LABELS_TSV_COLUMNS = (
    "config_id",
    "munition",
    "impact_energy_mj",
    "penetration_class",
    "angle_deg",
    "stack",
    "module_depth_m",
    "rd",
    "penetration_depth_m",
    "residual_energy_mj",
)


def labels_to_tsv(rows: Sequence[LabelRow]) -> str:
    lines = ["\t".join(LABELS_TSV_COLUMNS)]
    for r in rows:
        lines.append(
            "\t".join(
                [
                    r.config_id,
                    r.munition.name,
                    repr(r.munition.impact_energy_mj),
                    repr(r.munition.penetration_class),
                    repr(r.angle_deg),
                    r.stack.name,
                    repr(r.module_depth_m),
                    repr(r.rd),
                    repr(r.penetration_depth_m),
                    repr(r.residual_energy_mj),
                ]
            )
        )
    return "\n".join(lines) + "\n"
