"""Flat key-value config text with bracketed section headers.

No nesting: a file is a sequence of ``[section]`` headers, each followed by
``key=value`` tokens (one or several per line).  Later duplicate sections
merge into the earlier ones.
"""

from __future__ import annotations

from .errors import ConfigError


def parse_sections(text: str) -> dict:
    """Parse config text into {section: {key: value}} of strings."""
    sections = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections.setdefault(current, {})
            continue
        if current is None:
            raise ConfigError(f"key-value line before any [section]: {raw!r}")
        for tok in line.split():
            if "=" not in tok:
                raise ConfigError(f"expected key=value token, got {tok!r}")
            k, v = tok.split("=", 1)
            sections[current][k.strip()] = v.strip()
    return sections


def read_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_sections(fh.read())


def fmt17(x: float) -> str:
    """Floats printed with 17 significant digits (round-trip exact)."""
    return f"{float(x):.17g}"
