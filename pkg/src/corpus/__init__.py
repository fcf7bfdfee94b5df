"""Bundled wreath recursions shipped as ``.ssg`` data files."""
import os
from typing import List

from src.models.recursion import RecursionSystem
from src.parser.dsl import SourceDoc, parse
from src.utils.cache_layer import CacheLayer

CORPUS_DIR = os.path.dirname(os.path.abspath(__file__))

_loaded = CacheLayer("corpus")


def names() -> List[str]:
    return sorted(f[:-len(".ssg")] for f in os.listdir(CORPUS_DIR) if f.endswith(".ssg"))


def path(name: str) -> str:
    return os.path.join(CORPUS_DIR, f"{name}.ssg")


def load(name: str) -> RecursionSystem:
    if name not in names():
        raise KeyError(f"No bundled system named {name}")
    return _loaded.get_or_compute(name, lambda: parse(SourceDoc.from_path(path(name))))
