import numpy as np

from schottky.distortion import (derivative_constant, distortion_constants, exponential_rates, mirror_constant,
                                 multiplicativity_constant)


def test_constants_finite_and_stable(data):
    c4 = distortion_constants(data, 4)
    c6 = distortion_constants(data, 6)
    for k in c4:
        assert np.isfinite(c4[k]) and c4[k] >= 1
        assert abs(c6[k] / c4[k] - 1) < 0.05


def test_mirror_of_symmetric_config_is_modest(data):
    assert 1 <= mirror_constant(data, 5) < 2


def test_exponential_rates(data):
    rates = exponential_rates(data, range(2, 9))
    vals = [rates[N] for N in range(2, 9)]
    assert all(v < 1 for v in vals)
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_multiplicativity_bruteforce(data):
    # independent oracle: direct loop over pairs with |uv| <= 4
    from schottky.geometry import enumerate_words, interval_length, is_admissible
    worst = 0.0
    for L in range(2, 5):
        for w in enumerate_words(2, L):
            for a in range(1, L):
                r = np.log(interval_length(data, w)) - np.log(interval_length(data, w[:a])) \
                    - np.log(interval_length(data, w[a:]))
                worst = max(worst, abs(r))
    assert multiplicativity_constant(data, 4) == np.exp(worst) or abs(multiplicativity_constant(data, 4) / np.exp(worst) - 1) < 1e-10


def test_derivative_constant_finite(data):
    K = derivative_constant(data, 5)
    assert 1 <= K < 100
