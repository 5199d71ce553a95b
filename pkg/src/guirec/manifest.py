"""Run manifests: every CLI run records what it did, replayably.

A manifest holds the subcommand, the fully resolved configuration (all
defaults materialized), input/output paths and the master seed.  Because
every pipeline stage is a pure function of (inputs, config, seed),
re-running from a manifest reproduces the outputs byte for byte.  No
wall-clock data is recorded, on purpose.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from . import __version__
from .errors import ParseError

MANIFEST_VERSION = 1


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: Optional[int] = None
    artifact_version: str = __version__
    manifest_version: int = MANIFEST_VERSION

    def save(self, destination) -> None:
        with open(destination, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, source) -> "RunManifest":
        try:
            with open(source, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{source}: not valid JSON ({exc})") from None
        if doc.get("manifest_version") != MANIFEST_VERSION:
            raise ParseError(f"{source}: unsupported manifest version "
                             f"{doc.get('manifest_version')!r}")
        return cls(subcommand=doc["subcommand"], config=doc["config"],
                   inputs=doc.get("inputs", {}), outputs=doc.get("outputs", {}),
                   seed=doc.get("seed"),
                   artifact_version=doc.get("artifact_version", "unknown"))
