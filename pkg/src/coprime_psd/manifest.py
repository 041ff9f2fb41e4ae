"""Run manifests: the resolved configuration behind every CLI output."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .fileio import atomic_write, sha256_file


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass
class RunManifest:
    """What ran, with which resolved config, and what it wrote.

    Outputs of kind ``"data"`` are reproducible byte for byte from
    ``config``; kind ``"measurement"`` marks wall-clock timings, which are
    not.
    """

    command: str
    config: dict
    seed: int | None
    tool_version: str = __version__
    outputs: list = field(default_factory=list)
    started_at: str = field(default_factory=utc_now)
    finished_at: str | None = None
    notes: dict = field(default_factory=dict)

    def add_output(self, path, kind: str = "data") -> None:
        path = Path(path)
        self.outputs.append({"path": str(path.resolve()), "kind": kind, "sha256": sha256_file(path)})

    def data_outputs(self) -> list[dict]:
        return [o for o in self.outputs if o["kind"] == "data"]

    def write(self, path) -> Path:
        if self.finished_at is None:
            self.finished_at = utc_now()
        return atomic_write(path, json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def manifest_path_for(output) -> Path:
    output = Path(output)
    return output.with_name(output.stem + ".manifest.json")
