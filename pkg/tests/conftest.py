import pytest

from memdpe.params import load_config


@pytest.fixture(scope="session")
def cfg():
    return load_config()


@pytest.fixture(scope="session")
def dataset_path():
    from importlib import resources

    def _path(name):
        return str(resources.files("memdpe").joinpath(f"data/datasets/{name}.csv"))

    return _path
