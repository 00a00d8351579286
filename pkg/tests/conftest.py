# tests/conftest.py

import pytest

from graetzmodes.domain import double_pass, heated_pipe, pure_diffusion


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long closure builds (deselect with -m 'not slow')")


@pytest.fixture
def unit_disk():
    spec, _ = pure_diffusion(radius=1)
    return spec


@pytest.fixture
def heated_pipe_problem():
    return heated_pipe(1)


@pytest.fixture
def double_pass_problem():
    return double_pass(1)
