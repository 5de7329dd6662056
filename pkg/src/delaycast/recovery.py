"""Recovery-stage durations, critical-path delay, and the strategic delay index.

Stage durations scale their base length with the damage fraction of the
module that drives them; the total delay is the longest dependency path
through the stage DAG; the index (SDI) is a weighted, window-normalized
combination of stage durations scaled by an elasticity factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

LABEL_MIN_DAYS = 45.0
LABEL_MAX_DAYS = 365.0


class RecoveryError(ValueError):
    pass


class StageName(Enum):
    StructuralClearing = "StructuralClearing"
    VentilationRebuild = "VentilationRebuild"
    ElectricalRewiring = "ElectricalRewiring"
    CentrifugeReconfig = "CentrifugeReconfig"


@dataclass(frozen=True, slots=True)
class RecoveryStage:
    id: str
    name: StageName
    base_duration_days: float
    dependencies: tuple[str, ...]
    damage_sensitivity: float
    driving_module: str

    def __post_init__(self):
        if self.damage_sensitivity < 0:
            raise RecoveryError(f"stage {self.id}: damage_sensitivity must be >= 0")
        if self.base_duration_days <= 0:
            raise RecoveryError(f"stage {self.id}: base_duration_days must be > 0")


def default_stages() -> tuple[RecoveryStage, ...]:
    """Four-stage chain: clearing -> ventilation -> electrical -> centrifuge."""
    return (
        RecoveryStage("structural_clearing", StageName.StructuralClearing, 20.0, (), 1.5, "main_control"),
        RecoveryStage("ventilation_rebuild", StageName.VentilationRebuild, 25.0, ("structural_clearing",), 1.5, "ventilation"),
        RecoveryStage("electrical_rewiring", StageName.ElectricalRewiring, 30.0, ("ventilation_rebuild",), 1.5, "electrical"),
        RecoveryStage("centrifuge_reconfig", StageName.CentrifugeReconfig, 40.0, ("electrical_rewiring",), 1.5, "centrifuge"),
    )


#: default stage -> weight-group mapping; every weight group is covered so the
#: all-durations-equal-window case normalizes to exactly 1.
DEFAULT_STAGE_GROUPS = {
    "structural_clearing": "main_control",
    "ventilation_rebuild": "secondary",
    "electrical_rewiring": "power",
    "centrifuge_reconfig": "centrifuge",
}


@dataclass(frozen=True, slots=True)
class SdiConfig:
    weights: Mapping[str, float] = field(
        default_factory=lambda: {"main_control": 0.35, "power": 0.30, "centrifuge": 0.25, "secondary": 0.10}
    )
    t_window_days: float = 90.0
    elasticity: float = 0.0

    def __post_init__(self):
        total = sum(self.weights.values())
        if abs(total - 1.0) > 1e-9:
            raise RecoveryError(f"SDI weights sum to {total}, expected 1")
        if self.t_window_days <= 0:
            raise RecoveryError("t_window_days must be > 0")
        if not -0.2 <= self.elasticity <= 0.2:
            raise RecoveryError("elasticity must lie in [-0.2, 0.2]")


@dataclass(frozen=True, slots=True)
class RecoveryPlan:
    durations_days: dict[str, float]
    critical_path: tuple[str, ...]
    total_delay_days: float

    def as_label(self) -> float:
        """Total delay clamped to the credible label interval."""
        return min(max(self.total_delay_days, LABEL_MIN_DAYS), LABEL_MAX_DAYS)


def stage_durations(
    damage_rd: Mapping[str, float],
    stages: Sequence[RecoveryStage] = (),
) -> dict[str, float]:
    """T_i = base_i * (1 + sensitivity_i * rd of the stage's driving module)."""
    stages = tuple(stages) or default_stages()
    out: dict[str, float] = {}
    for st in stages:
        if st.driving_module not in damage_rd:
            raise RecoveryError(f"stage {st.id}: no damage value for driving module {st.driving_module!r}")
        rd = damage_rd[st.driving_module]
        out[st.id] = st.base_duration_days * (1.0 + st.damage_sensitivity * rd)
    return out


def recovery_delay(
    durations: Mapping[str, float],
    dependencies: Mapping[str, Sequence[str]],
) -> RecoveryPlan:
    """Longest dependency path; ties broken by lexicographic stage-id path."""
    order = _toposort(durations.keys(), dependencies)
    best_len: dict[str, float] = {}
    best_path: dict[str, tuple[str, ...]] = {}
    for sid in order:
        deps = list(dependencies.get(sid, ()))
        if not deps:
            best_len[sid] = durations[sid]
            best_path[sid] = (sid,)
            continue
        choice = min(deps, key=lambda d: (-best_len[d], best_path[d]))
        best_len[sid] = best_len[choice] + durations[sid]
        best_path[sid] = best_path[choice] + (sid,)
    top = min(best_len, key=lambda s: (-best_len[s], best_path[s]))
    return RecoveryPlan(
        durations_days=dict(durations),
        critical_path=best_path[top],
        total_delay_days=best_len[top],
    )


def _toposort(ids, dependencies: Mapping[str, Sequence[str]]) -> list[str]:
    ids = sorted(ids)
    state: dict[str, int] = {}
    out: list[str] = []

    def visit(sid: str, trail: tuple[str, ...]) -> None:
        mark = state.get(sid, 0)
        if mark == 1:
            raise RecoveryError(f"dependency cycle through {sid!r}: {' -> '.join(trail + (sid,))}")
        if mark == 2:
            return
        state[sid] = 1
        for dep in sorted(dependencies.get(sid, ())):
            if dep not in ids:
                raise RecoveryError(f"stage {sid}: unknown dependency {dep!r}")
            visit(dep, trail + (sid,))
        state[sid] = 2
        out.append(sid)

    for sid in ids:
        visit(sid, ())
    return out


def sdi(
    durations: Mapping[str, float],
    stage_groups: Mapping[str, str] = DEFAULT_STAGE_GROUPS,
    config: SdiConfig = SdiConfig(),
) -> float:
    """(1 + elasticity) * sum over groups of weight * max stage duration / window."""
    group_max: dict[str, float] = {}
    for sid, t in durations.items():
        if sid not in stage_groups:
            raise RecoveryError(f"stage {sid!r} is not mapped to a weight group")
        g = stage_groups[sid]
        if g not in config.weights:
            raise RecoveryError(f"stage {sid!r} maps to unknown weight group {g!r}")
        group_max[g] = max(group_max.get(g, 0.0), t)
    score = sum(config.weights[g] * t / config.t_window_days for g, t in group_max.items())
    return (1.0 + config.elasticity) * score
