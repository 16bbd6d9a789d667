"""Flat key=value run configuration files."""

from pathlib import Path

ConfigValue = str | list[str]


def option_key(key: str) -> str:
    """Config key of an option: leading dashes dropped, inner dashes as underscores."""
    return key.strip().lstrip("-").replace("-", "_")


def parse_config(text: str) -> dict[str, ConfigValue]:
    """
    Parse a run configuration.

    One ``key=value`` per line; ``#`` starts a comment; a value containing
    commas becomes a list. Keys may be prefixed with a command name
    (``martingale.paths=20000``).

    Raises:
        ValueError: On a line without '=' or with an empty key
    """
    entries: dict[str, ConfigValue] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {number}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"config line {number}: empty key")
        if "," in value:
            entries[key] = [item.strip() for item in value.split(",") if item.strip()]
        else:
            entries[key] = value
    return entries


def to_default_map(
    entries: dict[str, ConfigValue], commands: list[str]
) -> dict[str, dict[str, ConfigValue]]:
    """
    Build click's default_map.

    Bare keys apply to every command; ``command.key`` applies to one.
    Command-specific keys win over bare ones.
    """
    default_map: dict[str, dict[str, ConfigValue]] = {name: {} for name in commands}
    scoped = []
    for key, value in entries.items():
        command, dot, option = key.partition(".")
        if dot and command in default_map:
            scoped.append((command, option_key(option), value))
            continue
        for name in commands:
            default_map[name][option_key(key)] = value
    for command, option, value in scoped:
        default_map[command][option] = value
    return default_map


def load_default_map(
    path: Path, commands: list[str]
) -> dict[str, dict[str, ConfigValue]]:
    return to_default_map(parse_config(Path(path).read_text()), commands)
