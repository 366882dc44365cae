"""Run manifests written next to every CLI output."""
from __future__ import annotations

import json
import os
import platform
from dataclasses import asdict, dataclass, field

from . import __version__
from .kernels import BACKEND


@dataclass
class RunManifest:
    subcommand: str
    argv: list
    config_path: str = None
    config_text: str = None
    seeds: list = field(default_factory=list)
    output_dir: str = None
    params: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    version: str = __version__
    kernel_backend: str = BACKEND
    python: str = platform.python_version()

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


def sidecar_path(output_path):
    """Manifest location for a single-file output: ``<output>.manifest.json``."""
    return os.fspath(output_path) + ".manifest.json"
