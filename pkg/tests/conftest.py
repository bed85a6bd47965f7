"""Shared fixtures: demo pack, glossary-backed translator, service factory.

The whole suite runs hermetically: TRANSLATOR_BACKEND is pinned to the
glossary backend with a file written at session start, so no test can
accidentally depend on a network translator.
"""

from __future__ import annotations

import os

import pytest

from polytutor.content import load_pack
from polytutor.demopack import write_demo_glossary, write_demo_pack
from polytutor.events import EventStore
from polytutor.session import TutorService
from polytutor.translation import GlossaryBackend, load_glossary


@pytest.fixture(scope="session")
def demo_pack_dir(tmp_path_factory):
    return write_demo_pack(tmp_path_factory.mktemp("content") / "pack")


@pytest.fixture(scope="session")
def glossary_path(tmp_path_factory):
    return write_demo_glossary(tmp_path_factory.mktemp("glossary") / "demo.tsv")


@pytest.fixture(scope="session", autouse=True)
def hermetic_translator_env(glossary_path):
    os.environ["TRANSLATOR_BACKEND"] = "glossary"
    os.environ["GLOSSARY_PATH"] = str(glossary_path)
    os.environ.pop("TRANSLATOR_ENDPOINT", None)
    os.environ.pop("TRANSLATOR_API_KEY", None)
    yield


@pytest.fixture(scope="session")
def demo_pack(demo_pack_dir):
    return load_pack(demo_pack_dir)


@pytest.fixture
def make_service(demo_pack, glossary_path, tmp_path):
    """Factory for isolated services over the demo pack.

    Password hashing is cranked down: credential strength is irrelevant to
    what these tests assert and the default cost would dominate runtimes.
    """

    def factory(**overrides) -> TutorService:
        log = overrides.pop("log_path", tmp_path / "events.ndjson")
        store = overrides.pop("store", None) or EventStore(log)
        defaults = dict(
            backend=GlossaryBackend(load_glossary(str(glossary_path))),
            hash_iterations=500,
            credentials_path=tmp_path / "credentials.json",
        )
        defaults.update(overrides)
        return TutorService(demo_pack, store, **defaults)

    return factory
