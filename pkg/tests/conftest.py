from __future__ import annotations

import pytest

from incore.session import SessionArtifacts


@pytest.fixture(scope="session")
def artifacts() -> SessionArtifacts:
    return SessionArtifacts.load()


@pytest.fixture(scope="session")
def config(artifacts):
    return artifacts.config


@pytest.fixture(scope="session")
def taxonomy(artifacts):
    return artifacts.taxonomy


@pytest.fixture(scope="session")
def repertoire(artifacts):
    return artifacts.repertoire
