"""Scenario presets and TOML configuration handling.

A configuration file has two tables: [scenario] (mesh geometry, traction,
molecule boundary value, output cadence, optionally a named preset to start
from) and [parameters] (overrides of the model constants).  Unknown keys are
rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .materials import ParameterSet, validate_parameters
from .mesh import FixateurSpec, Mesh, build_cylinder_mesh
from .validation import ConfigError


@dataclass(frozen=True)
class MeshSpec:
    length: float = 30.0
    radius: float = 10.0
    target_edge: float = 2.5
    fixateur: FixateurSpec | None = None

    def build(self) -> Mesh:
        return build_cylinder_mesh(self.length, self.radius, self.target_edge,
                                   self.fixateur)


@dataclass(frozen=True)
class Scenario:
    name: str
    mesh: MeshSpec
    traction: float = 0.001          # GPa, downward on the loaded cap
    molecule_dirichlet: float = 1.0  # saturation value adjacent to bone
    output_every: int = 8            # VTK cadence in steps


def preset(name: str) -> Scenario:
    """Named experiment presets; the no-fixateur run reduces the traction
    to 70% of the fixateur run's value."""
    if name == "fixateur":
        return Scenario(name="fixateur", mesh=MeshSpec(fixateur=FixateurSpec()),
                        traction=0.001)
    if name == "no-fixateur":
        return Scenario(name="no-fixateur", mesh=MeshSpec(fixateur=None),
                        traction=0.0007)
    raise ConfigError(f"unknown preset {name!r}; available: fixateur, no-fixateur")


_PARAM_FIELDS = {f.name for f in dataclasses.fields(ParameterSet)}
_SCENARIO_KEYS = {"preset", "name", "traction", "molecule_dirichlet", "output_every",
                  "mesh"}
_MESH_KEYS = {"length", "radius", "target_edge", "fixateur"}
_FIXATEUR_KEYS = {"height", "arc_width", "thickness", "center_angle"}


def _reject_unknown(table: dict, allowed: set[str], where: str, errors: list[str]):
    for key in table:
        if key not in allowed:
            errors.append(f"unknown key {key!r} in [{where}]")


def load_config_data(data: dict) -> tuple[Scenario, ParameterSet]:
    """Build a validated (Scenario, ParameterSet) pair from parsed TOML."""
    errors: list[str] = []
    _reject_unknown(data, {"scenario", "parameters"}, "top level", errors)

    sc_table = dict(data.get("scenario", {}))
    _reject_unknown(sc_table, _SCENARIO_KEYS, "scenario", errors)
    preset_name = sc_table.pop("preset", None)
    scenario = preset(preset_name) if preset_name else Scenario(
        name="custom", mesh=MeshSpec())

    mesh_table = dict(sc_table.pop("mesh", {}))
    _reject_unknown(mesh_table, _MESH_KEYS, "scenario.mesh", errors)
    fix_entry = mesh_table.pop("fixateur", None)
    mesh_kwargs = {k: float(v) for k, v in mesh_table.items()}
    fixateur = scenario.mesh.fixateur
    if isinstance(fix_entry, bool):
        fixateur = FixateurSpec() if fix_entry else None
    elif isinstance(fix_entry, dict):
        _reject_unknown(fix_entry, _FIXATEUR_KEYS, "scenario.mesh.fixateur", errors)
        if not errors:
            fixateur = FixateurSpec(**{k: float(v) for k, v in fix_entry.items()})
    elif fix_entry is not None:
        errors.append("scenario.mesh.fixateur must be a boolean or a table")
    if errors:
        raise ConfigError("configuration rejected", errors)

    mesh_spec = replace(scenario.mesh, fixateur=fixateur, **mesh_kwargs)
    scalar_updates = {}
    for key in ("name", "traction", "molecule_dirichlet", "output_every"):
        if key in sc_table:
            scalar_updates[key] = sc_table[key]
    scenario = replace(scenario, mesh=mesh_spec, **scalar_updates)
    if scenario.traction < 0:
        errors.append(f"traction must be >= 0, got {scenario.traction}")
    if scenario.output_every < 1:
        errors.append(f"output_every must be >= 1, got {scenario.output_every}")

    param_table = dict(data.get("parameters", {}))
    _reject_unknown(param_table, _PARAM_FIELDS, "parameters", errors)
    if errors:
        raise ConfigError("configuration rejected", errors)
    for key in ("k2", "k3"):
        if key in param_table:
            param_table[key] = tuple(float(v) for v in param_table[key])
    params = ParameterSet(**param_table)
    report = validate_parameters(params)
    if not report.ok:
        raise ConfigError("parameter validation failed", report.messages())
    return scenario, params


def load_config(path: str) -> tuple[Scenario, ParameterSet]:
    """Parse and validate a TOML configuration file."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}")
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"TOML parse error in {path}: {err}")
    return load_config_data(data)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)}")


def dump_config(scenario: Scenario, params: ParameterSet) -> str:
    """Serialize the fully resolved configuration; load(dump(x)) == x."""
    lines = ["[scenario]"]
    lines.append(f"name = {_toml_value(scenario.name)}")
    lines.append(f"traction = {_toml_value(scenario.traction)}")
    lines.append(f"molecule_dirichlet = {_toml_value(scenario.molecule_dirichlet)}")
    lines.append(f"output_every = {_toml_value(scenario.output_every)}")
    lines.append("")
    lines.append("[scenario.mesh]")
    for key in ("length", "radius", "target_edge"):
        lines.append(f"{key} = {_toml_value(getattr(scenario.mesh, key))}")
    if scenario.mesh.fixateur is None:
        lines.append("fixateur = false")
    else:
        lines.append("")
        lines.append("[scenario.mesh.fixateur]")
        for key in ("height", "arc_width", "thickness", "center_angle"):
            lines.append(f"{key} = {_toml_value(getattr(scenario.mesh.fixateur, key))}")
    lines.append("")
    lines.append("[parameters]")
    for f in dataclasses.fields(ParameterSet):
        value = getattr(params, f.name)
        if value is None:
            continue
        lines.append(f"{f.name} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"
