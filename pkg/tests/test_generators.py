import numpy as np
import pytest

from alma_learning import GeneratorSpec, gen_binary, gen_map, gen_noisy_common, generate, hungarian
from alma_learning.generators import map_utility


def test_map_utility_examples():
    assert map_utility(3) == pytest.approx(1 / 3)
    assert map_utility(0) == 1.0 and map_utility(1) == 1.0


@pytest.mark.parametrize("n", [1, 2, 8, 33])
def test_map_values_and_grid(n):
    for seed in range(10):
        u = gen_map(n, seed).utility
        assert u.shape == (n, n)
        assert np.all((u > 0) & (u <= 1))
        side = int(np.ceil(np.sqrt(4 * n)))
        # the largest Manhattan distance on the grid bounds utilities from below
        assert u.min() >= 1 / max(2 * (side - 1), 1) - 1e-12
        # every value is the reciprocal of an integer distance
        d = 1 / u
        assert np.allclose(d, np.round(d))


def test_noisy_common_sd_close_to_sigma():
    sigma, devs = 0.1, []
    for seed in range(4):
        inst, base = gen_noisy_common(200, sigma, seed, return_base=True)
        # resources whose base sits far from the clamp bounds see almost no clipping
        mid = (base > 0.35) & (base < 0.65)
        devs.append((inst.utility[:, mid] - base[mid]).ravel())
    devs = np.concatenate(devs)
    assert devs.size > 20_000
    assert abs(devs.std() - sigma) <= 0.05 * sigma


def test_noisy_common_small_sigma_rows_agree():
    inst, base = gen_noisy_common(16, 1e-9, 3, return_base=True)
    assert np.allclose(inst.utility, base[None, :], atol=1e-7)
    u = gen_noisy_common(32, 0.5, 1).utility
    assert np.all((u >= 0) & (u <= 1))


def test_binary_extremes_and_mean():
    assert hungarian(gen_binary(7, 1.0, 0)).social_welfare == 7
    assert gen_binary(7, 0.0, 0).utility.sum() == 0
    means = [gen_binary(16, 0.5, s).utility.mean() for s in range(100)]
    assert abs(np.mean(means) - 0.5) <= 0.05
    assert set(np.unique(gen_binary(16, 0.5, 1).utility)) <= {0.0, 1.0}


@pytest.mark.parametrize("family", ["map", "noisy_common", "binary"])
def test_generators_are_deterministic(family):
    a = generate(GeneratorSpec(family, 12, seed=5)).utility
    b = generate(GeneratorSpec(family, 12, seed=5)).utility
    c = generate(GeneratorSpec(family, 12, seed=6)).utility
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("kwargs", [dict(family="grid", n=4), dict(family="map", n=0),
                                    dict(family="noisy_common", n=4, sigma=0.0),
                                    dict(family="binary", n=4, p_one=1.0)])
def test_generator_spec_validation(kwargs):
    with pytest.raises(ValueError):
        GeneratorSpec(**kwargs)
