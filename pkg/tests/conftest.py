from __future__ import annotations

import socket
from pathlib import Path

import pytest

from tradetalk.gateway import default_directory

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def directory():
    return default_directory()


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


def _blocked(*args, **kwargs):
    raise AssertionError("network access attempted during an offline test")


@pytest.fixture(autouse=True)
def block_network(monkeypatch):
    """The whole suite runs offline: any socket connection attempt fails."""
    monkeypatch.setattr(socket.socket, "connect", _blocked)
    monkeypatch.setattr(socket, "create_connection", _blocked)
    yield
