"""Arena config files and command scripts for the CLI.

Config files are line-oriented `key = value` text with [sections], parsed by
configparser. Example:

    [arena]
    width = 1.5
    height = 1.0
    sensing_radius = 0.05
    seed = 42

    [atoms]
    place =
        H 0.50 0.50
        H 0.53 0.50
        O 0.515 0.52
    random =
        H 5
        O 2

Command scripts are one command per line, `<tick> <op> [args...]`:

    0   pause
    0   step 10
    50  add_atom H 0.3 0.4
    80  steer 2 0.9 0.8
    100 break_molecule 0
    120 remove_droplet 1
    150 resume
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from typing import Any

from .sim import Arena, ArenaConfig

ARENA_KEYS = {
    "width": float,
    "height": float,
    "sensing_radius": float,
    "step_length": float,
    "slot_count": int,
    "ticks_per_slot": int,
    "seed": int,
    "heading_jitter": float,
    "random_walk": bool,
    "auto_assign_slots": bool,
    "p_fail": float,
    "max_protocol_rounds": int,
    "diatomic_max_order": bool,
}


class ConfigError(ValueError):
    """Malformed config file or command script (CLI exit code 2)."""


@dataclass
class ScriptCommand:
    tick: int
    command: dict[str, Any]


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def load_arena_config(path: str) -> tuple[ArenaConfig, list[tuple[str, float, float]], list[tuple[str, int]]]:
    """Parse a config file into (ArenaConfig, placed atoms, random atom counts)."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    kwargs: dict[str, Any] = {}
    if parser.has_section("arena"):
        for key, raw in parser.items("arena"):
            if key not in ARENA_KEYS:
                raise ConfigError(f"[arena] unknown key {key!r}")
            caster = ARENA_KEYS[key]
            try:
                kwargs[key] = _parse_bool(raw) if caster is bool else caster(raw)
            except ValueError as exc:
                raise ConfigError(f"[arena] {key}: {exc}") from None
    try:
        config = ArenaConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    placed: list[tuple[str, float, float]] = []
    randoms: list[tuple[str, int]] = []
    if parser.has_section("atoms"):
        for key, raw in parser.items("atoms"):
            lines = [ln.strip() for ln in raw.splitlines() if ln.strip()]
            if key == "place":
                for ln in lines:
                    fields = ln.split()
                    if len(fields) != 3:
                        raise ConfigError(f"[atoms] place line needs 'SYM x y': {ln!r}")
                    try:
                        placed.append((fields[0], float(fields[1]), float(fields[2])))
                    except ValueError:
                        raise ConfigError(f"[atoms] bad coordinates: {ln!r}") from None
            elif key == "random":
                for ln in lines:
                    fields = ln.split()
                    if len(fields) != 2:
                        raise ConfigError(f"[atoms] random line needs 'SYM count': {ln!r}")
                    try:
                        randoms.append((fields[0], int(fields[1])))
                    except ValueError:
                        raise ConfigError(f"[atoms] bad count: {ln!r}") from None
            else:
                raise ConfigError(f"[atoms] unknown key {key!r}")
    return config, placed, randoms


def build_arena(path: str) -> Arena:
    """Construct and seal an arena from a config file."""
    config, placed, randoms = load_arena_config(path)
    arena = Arena(config)
    try:
        for symbol, x, y in placed:
            arena.add_droplet(symbol, x, y)
        for symbol, count in randoms:
            for _ in range(count):
                arena.add_droplet(symbol)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"atom placement failed: {exc}") from None
    arena.seal()
    return arena


_SCRIPT_GRAMMAR: dict[str, tuple[str, ...]] = {
    "add_atom": ("symbol:str", "x:float", "y:float"),
    "remove_droplet": ("id:int",),
    "break_molecule": ("group_id:int",),
    "steer": ("id:int", "x:float", "y:float"),
    "pause": (),
    "resume": (),
    "step": ("k:int",),
}


def parse_script(path: str) -> list[ScriptCommand]:
    """Parse a command script fully up front; any malformed line aborts with
    its line number before the simulation starts."""
    commands: list[ScriptCommand] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            try:
                tick = int(fields[0])
                if tick < 0:
                    raise ValueError("tick must be >= 0")
                op = fields[1]
                spec = _SCRIPT_GRAMMAR[op]
                args = fields[2:]
                if len(args) != len(spec):
                    raise ValueError(f"{op} expects {len(spec)} argument(s), got {len(args)}")
                command: dict[str, Any] = {"op": op}
                for arg_spec, value in zip(spec, args):
                    name, kind = arg_spec.split(":")
                    command[name] = int(value) if kind == "int" else float(value) if kind == "float" else value
            except (ValueError, KeyError, IndexError) as exc:
                raise ConfigError(f"{path}:{lineno}: malformed script line: {exc}") from None
            commands.append(ScriptCommand(tick, command))
    commands.sort(key=lambda sc: sc.tick)
    return commands
