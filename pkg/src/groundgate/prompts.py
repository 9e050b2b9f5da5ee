"""Versioned prompt templates.

A template file is a header of ``# name: value`` lines, a ``---`` line, and
the body. Bodies use ``{placeholder}`` markers; literal braces (JSON
examples) are left untouched because substitution only replaces declared
placeholder names. Rendered prompts start with two sentinel lines::

    ### template: direct_prompt@1.0.0
    ### key: record_7

which let the scripted chat mock route requests offline and double as a
trace id against real endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigurationError

BUNDLED_DIR = Path(__file__).resolve().parent / "templates"


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    version: str
    body: str
    placeholders: tuple[str, ...]
    meta: dict[str, str] = field(default_factory=dict, compare=False)

    @classmethod
    def parse(cls, text: str, origin: str = "<string>") -> "PromptTemplate":
        head, sep, body = text.partition("\n---\n")
        if not sep:
            raise ConfigurationError(f"{origin}: template header must end with a '---' line")
        meta: dict[str, str] = {}
        for line in head.splitlines():
            line = line.strip()
            if not line:
                continue
            if not line.startswith("#") or ":" not in line:
                raise ConfigurationError(f"{origin}: bad header line {line!r}")
            name, _, value = line.lstrip("#").partition(":")
            meta[name.strip()] = value.strip()
        for required in ("template", "version"):
            if required not in meta:
                raise ConfigurationError(f"{origin}: header lacks '{required}'")
        names = tuple(p.strip() for p in meta.get("placeholders", "").split(",") if p.strip())
        for name in names:
            if "{" + name + "}" not in body:
                raise ConfigurationError(f"{origin}: placeholder {{{name}}} declared but unused")
        return cls(meta["template"], meta["version"], body.strip("\n") + "\n", names, meta)

    def render(self, key: str, **values: str) -> str:
        missing = [p for p in self.placeholders if p not in values]
        if missing:
            raise ConfigurationError(f"template {self.template_id} needs values for {missing}")
        body = self.body
        for name in self.placeholders:
            body = body.replace("{" + name + "}", values[name])
        return f"### template: {self.template_id}@{self.version}\n### key: {key}\n\n{body}"


class TemplateStore:
    """Loads templates from ``directory`` first, then from the bundled set."""

    def __init__(self, directory: Optional[str | Path] = None):
        self.directory = Path(directory) if directory else None
        self._cache: dict[str, PromptTemplate] = {}

    def get(self, template_id: str) -> PromptTemplate:
        if template_id not in self._cache:
            for base in (self.directory, BUNDLED_DIR):
                if base is None:
                    continue
                path = base / f"{template_id}.txt"
                if path.is_file():
                    tpl = PromptTemplate.parse(path.read_text(encoding="utf-8"), str(path))
                    if tpl.template_id != template_id:
                        raise ConfigurationError(f"{path}: header names {tpl.template_id!r}")
                    self._cache[template_id] = tpl
                    break
            else:
                raise ConfigurationError(f"no template named {template_id!r}")
        return self._cache[template_id]


_default_store = TemplateStore()


def get_template(template_id: str) -> PromptTemplate:
    return _default_store.get(template_id)


def format_context(passages) -> str:
    return "\n\n".join(passages)
