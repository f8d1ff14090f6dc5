"""Shared fixtures: corpus discovery and cached analyzer/oracle results.

Analyzer and oracle runs are memoized per (program, model) so the property
suites and the acceptance gate can sample them repeatedly without re-paying
the fixpoint or the execution enumeration.
"""
from __future__ import annotations

import functools
import pathlib

import pytest

from relaxcheck import MemoryModel, analyze_all, parse_and_lower
from relaxcheck.oracle import enumerate_executions, violates

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"

CORPUS_FILES = sorted(p.name for p in CORPUS.glob("*.lit"))

MODELS = [MemoryModel.SC, MemoryModel.TSO, MemoryModel.PSO, MemoryModel.RMO]


@functools.lru_cache(maxsize=None)
def corpus_text(name: str) -> str:
    return (CORPUS / name).read_text(encoding="utf-8")


@functools.lru_cache(maxsize=None)
def corpus_program(name: str):
    program, _ = parse_and_lower(corpus_text(name))
    return program


@functools.lru_cache(maxsize=None)
def analyzer_result(name: str, model: MemoryModel):
    """(env_map, verdicts, stats) for one corpus program and model."""
    return analyze_all(corpus_program(name), model)


@functools.lru_cache(maxsize=None)
def oracle_flags(name: str, model: MemoryModel) -> dict[int, bool]:
    return violates(corpus_program(name), model)


@functools.lru_cache(maxsize=None)
def oracle_behaviors(name: str, model: MemoryModel) -> frozenset:
    return frozenset(enumerate_executions(corpus_program(name), model))


@pytest.fixture(scope="session")
def corpus_dir() -> pathlib.Path:
    return CORPUS
