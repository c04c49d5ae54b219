#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Corpus manifests: one JSON record per line with midi_path, caption and split
"""

import os
import json
import logging
from dataclasses import dataclass, field, asdict
from typing import List, Optional

from midillm.errors import ManifestError

logger = logging.getLogger(__name__)

SPLITS = ("pretrain", "finetune")


@dataclass(frozen=True)
class ManifestEntry:
    """One MIDI file of the corpus"""
    midi_path: str
    caption: Optional[str] = None
    split: str = "pretrain"

    def __repr__(self):
        return f'<ManifestEntry {self.split} {self.midi_path}>'


@dataclass
class Manifest:
    """Manifest entries plus the directory relative paths are resolved against"""
    entries: List[ManifestEntry] = field(default_factory=list)
    base_dir: str = "."

    def __post_init__(self):
        seen = set()
        for entry in self.entries:
            if entry.split not in SPLITS:
                raise ManifestError(f"{entry.midi_path}: unknown split {entry.split!r}")
            if entry.midi_path in seen:
                raise ManifestError(f"duplicate midi_path {entry.midi_path}")
            if entry.split == "finetune" and not entry.caption:
                raise ManifestError(f"{entry.midi_path}: finetune entries need a caption")
            seen.add(entry.midi_path)

    @classmethod
    def load(cls, path):
        """Read a JSON Lines manifest

        Args:
            path (str): Manifest file

        Returns:
            Manifest: The parsed manifest
        """
        entries = []
        try:
            with open(path, 'r', encoding='utf-8') as f:
                for lineno, line in enumerate(f, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        record = json.loads(line)
                        entries.append(ManifestEntry(
                            midi_path=record["midi_path"],
                            caption=record.get("caption"),
                            split=record.get("split", "pretrain"),
                        ))
                    except (ValueError, KeyError, TypeError) as e:
                        raise ManifestError(f"{path}:{lineno}: {e}") from e
        except OSError as e:
            raise ManifestError(f"cannot read manifest {path}: {e}") from e

        manifest = cls(entries, base_dir=os.path.dirname(os.path.abspath(path)))
        logger.info(f"Loaded manifest {path} with {len(entries)} entries")
        return manifest

    def dump(self, path):
        """Write the manifest as JSON Lines"""
        with open(path, 'w', encoding='utf-8') as f:
            for entry in self.entries:
                f.write(json.dumps(asdict(entry), sort_keys=True, ensure_ascii=False) + "\n")

    def resolve(self, entry):
        """Absolute path of an entry's MIDI file"""
        if os.path.isabs(entry.midi_path):
            return entry.midi_path
        return os.path.normpath(os.path.join(self.base_dir, entry.midi_path))

    def split(self, name):
        """Entries of one split, sorted by path"""
        return sorted((e for e in self.entries if e.split == name), key=lambda e: e.midi_path)

    def __len__(self):
        return len(self.entries)
