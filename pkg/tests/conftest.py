"""Shared fixtures: the model geometries, built once per session."""

import pytest

from onofri_lab import build_geometry


@pytest.fixture(scope="session")
def circle256():
    return build_geometry("circle", 256)


@pytest.fixture(scope="session")
def sphere256():
    return build_geometry("sphere-zonal", 256)


@pytest.fixture(scope="session")
def sphere_vol256():
    return build_geometry("sphere-zonal", 256, normalization="unit-volume")


@pytest.fixture(scope="session")
def sphere64():
    return build_geometry("sphere-zonal", 64)


@pytest.fixture(scope="session")
def plane2048():
    return build_geometry("plane-radial", 2048)


@pytest.fixture(scope="session")
def plane1024():
    return build_geometry("plane-radial", 1024)
