import pytest

from impshap.data import (
    dataset_to_joint,
    example_tables,
    led_population,
    random_joint,
)


@pytest.fixture(scope="session")
def tables():
    return example_tables()


@pytest.fixture(scope="session")
def led_ds():
    return led_population()


@pytest.fixture(scope="session")
def led_joint(led_ds):
    return dataset_to_joint(led_ds)


@pytest.fixture(scope="session")
def random_joints():
    return [random_joint(seed) for seed in range(10)]
