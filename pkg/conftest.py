"""
Shared pytest fixtures: the shipped systems and session-wide services
"""
import pytest

from system.families import golden_system, logistic_system, middle_third_cantor
from system.services import GeometryService


@pytest.fixture(scope='session')
def cantor():
    return middle_third_cantor()


@pytest.fixture(scope='session')
def golden():
    return golden_system()


@pytest.fixture(scope='session')
def logistic():
    return logistic_system()


@pytest.fixture(scope='session')
def geometry():
    return GeometryService()


@pytest.fixture(scope='session')
def pressure_service(geometry):
    from pressure.services import PressureService
    return PressureService(geometry=geometry)


@pytest.fixture(scope='session')
def gibbs_service(geometry, pressure_service):
    from gibbs.services import GibbsService
    return GibbsService(geometry=geometry, pressure=pressure_service)


@pytest.fixture(scope='session')
def cantor_surrogate(gibbs_service, cantor):
    return gibbs_service.build_surrogate(cantor, depth=10)


@pytest.fixture(scope='session')
def golden_surrogate(gibbs_service, golden):
    return gibbs_service.build_surrogate(golden, depth=10)


@pytest.fixture(scope='session')
def logistic_surrogate(gibbs_service, logistic):
    return gibbs_service.build_surrogate(logistic, depth=10)


@pytest.fixture(scope='session')
def quantizer_service(geometry, gibbs_service):
    from quantizer.services import QuantizerService
    return QuantizerService(gibbs=gibbs_service, geometry=geometry)
