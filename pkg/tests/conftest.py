from pathlib import Path

import pytest

from cmdpkit import instances
from cmdpkit.model import Policy

INSTANCES_DIR = Path(__file__).resolve().parent.parent / "instances"


@pytest.fixture(scope="session")
def haviv():
    return instances.haviv()


@pytest.fixture(scope="session")
def haviv_a(haviv):
    return Policy.from_mapping(haviv, {"y": "a"})


@pytest.fixture(scope="session")
def haviv_b(haviv):
    return Policy.from_mapping(haviv, {"y": "b"})


@pytest.fixture(scope="session")
def twochain():
    return instances.twochain()


@pytest.fixture(scope="session")
def yacht():
    return instances.yacht()


@pytest.fixture(scope="session")
def instances_dir():
    return INSTANCES_DIR
