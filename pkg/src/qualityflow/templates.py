"""Prompt templates with diversified variants per agent.

Templates are plain text files named `<role>_<index>.txt` containing
`{placeholder}` slots. Only the placeholders a role's builder supplies are
substituted; every other brace in the template (code examples, dict literals)
is left untouched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError

ROLE_PLACEHOLDERS: dict[str, frozenset[str]] = {
    "generator": frozenset({"statement", "visible_tests"}),
    "designer": frozenset({"statement", "visible_tests", "batch"}),
    "debugger": frozenset({"statement", "code", "feedback"}),
    "clarifier": frozenset({"statement", "context_digest"}),
    "regenerator": frozenset({"clarified_statement", "visible_tests", "code"}),
}

_FILENAME = re.compile(r"^([a-z]+)_(\d+)\.txt$")
_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


class TemplateError(ConfigError):
    pass


@dataclass(frozen=True)
class PromptVariant:
    """One diversified prompt for one agent role."""

    role: str
    index: int
    template: str

    def render(self, values: dict[str, str]) -> str:
        allowed = ROLE_PLACEHOLDERS[self.role]

        def substitute(match: re.Match) -> str:
            name = match.group(1)
            if name in allowed and name in values:
                return values[name]
            return match.group(0)

        return _PLACEHOLDER.sub(substitute, self.template)


@dataclass(frozen=True)
class TemplateSet:
    variants: dict[str, tuple[PromptVariant, ...]]

    def for_role(self, role: str) -> tuple[PromptVariant, ...]:
        if role not in self.variants or not self.variants[role]:
            raise TemplateError(f"no templates loaded for role {role!r}")
        return self.variants[role]

    def variant(self, role: str, index: int) -> PromptVariant:
        """Pick a variant, wrapping indices past the last one."""
        pool = self.for_role(role)
        return pool[index % len(pool)]


def _validate(role: str, index: int, template: str, source: str) -> None:
    if role not in ROLE_PLACEHOLDERS:
        raise TemplateError(f"{source}: unknown template role {role!r}")
    if not template.strip():
        raise TemplateError(f"{source}: template is empty")
    names = set(_PLACEHOLDER.findall(template))
    unknown = names - ROLE_PLACEHOLDERS[role]
    if unknown:
        raise TemplateError(f"{source}: placeholders {sorted(unknown)} not used by {role}")
    missing = ROLE_PLACEHOLDERS[role] - names
    if missing:
        raise TemplateError(f"{source}: {role} template must use {sorted(missing)}")


def _assemble(found: dict[str, dict[int, str]]) -> TemplateSet:
    variants: dict[str, tuple[PromptVariant, ...]] = {}
    for role, items in found.items():
        indices = sorted(items)
        if indices != list(range(len(indices))):
            raise TemplateError(f"{role} variant indices must be dense 0..n-1, got {indices}")
        variants[role] = tuple(
            PromptVariant(role=role, index=i, template=items[i]) for i in indices
        )
    for role in ROLE_PLACEHOLDERS:
        if role not in variants:
            raise TemplateError(f"missing templates for role {role!r}")
    return TemplateSet(variants=variants)


def load_templates(directory: str | Path) -> TemplateSet:
    """Load a template set from a directory of `<role>_<index>.txt` files."""
    directory = Path(directory)
    if not directory.is_dir():
        raise TemplateError(f"template directory {directory} does not exist")
    found: dict[str, dict[int, str]] = {}
    for path in sorted(directory.glob("*.txt")):
        match = _FILENAME.match(path.name)
        if not match:
            continue
        role, index = match.group(1), int(match.group(2))
        text = path.read_text(encoding="utf-8")
        _validate(role, index, text, str(path))
        found.setdefault(role, {})[index] = text
    return _assemble(found)


def default_templates() -> TemplateSet:
    """Load the template set shipped with the package."""
    found: dict[str, dict[int, str]] = {}
    package_dir = resources.files("qualityflow").joinpath("templates")
    for entry in sorted(package_dir.iterdir(), key=lambda e: e.name):
        match = _FILENAME.match(entry.name)
        if not match:
            continue
        role, index = match.group(1), int(match.group(2))
        text = entry.read_text(encoding="utf-8")
        _validate(role, index, text, entry.name)
        found.setdefault(role, {})[index] = text
    return _assemble(found)
