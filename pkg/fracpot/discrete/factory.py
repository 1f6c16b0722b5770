from . import DiscreteKernelSpace
from ..errors import DomainError
from ..green import riesz_constant
import numpy as np


def _pairwise_distances(coords: np.ndarray) -> np.ndarray:
    return np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=-1)


def _power_kernel(dist: np.ndarray, exponent: float, scale: float = 1.) -> np.ndarray:
    with np.errstate(divide='ignore'):
        kernel = scale * np.power(dist, -exponent)
    np.fill_diagonal(kernel, np.inf)
    return kernel


def _weights(rng: np.random.Generator, points: int, weights: str) -> np.ndarray:
    if weights == 'uniform':
        return np.ones(points)
    elif weights == 'random':
        return rng.uniform(0.1, 1., points)
    raise DomainError(f"Invalid weights '{weights}'. Must be one of: ['uniform', 'random']")


def _set_diagonal(kernel: np.ndarray, diagonal: float) -> np.ndarray:
    # a finite diagonal is a multiple of the row maximum off the diagonal
    if np.isfinite(diagonal):
        off = np.where(np.eye(len(kernel), dtype=bool), 0., kernel)
        np.fill_diagonal(kernel, diagonal * off.max(axis=1))
    return kernel


def _riesz_space(
    seed: int,
    points: int = 8,
    n: int = 3,
    alpha: float = 0.5,
    box: float = 1.,
    weights: str = 'uniform',
    diagonal: float = np.inf,
    **kwargs,
) -> DiscreteKernelSpace:
    """C(n, alpha) |x - y|^(2 alpha - n) on uniform random points of [0, box]^n"""
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0., box, size=(points, n))
    kernel = _power_kernel(_pairwise_distances(coords), n - 2 * alpha, riesz_constant(n, alpha))
    return DiscreteKernelSpace(_set_diagonal(kernel, diagonal), _weights(rng, points, weights), coords)


def _three_point_space(seed: int = 0, **kwargs) -> DiscreteKernelSpace:
    """K(x, y) = K(y, z) = 1, K(x, z) = 1/2, infinite diagonal"""
    kernel = np.array([
        [np.inf, 1., .5],
        [1., np.inf, 1.],
        [.5, 1., np.inf],
    ])
    return DiscreteKernelSpace(kernel, np.ones(3), labels=('x', 'y', 'z'))


def _identity_space(seed: int = 0, points: int = 5, **kwargs) -> DiscreteKernelSpace:
    """K = 1 off the diagonal"""
    kernel = np.ones((points, points))
    np.fill_diagonal(kernel, np.inf)
    return DiscreteKernelSpace(kernel, np.ones(points))


def _power_distance_space(
    seed: int,
    points: int = 6,
    dim: int = 2,
    beta: float = 1.,
    weights: str = 'uniform',
    diagonal: float = np.inf,
    **kwargs,
) -> DiscreteKernelSpace:
    """d(x, y)^(-beta) for random points; the reciprocal of a quasi-metric"""
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0., 1., size=(points, dim))
    kernel = _power_kernel(_pairwise_distances(coords), beta)
    return DiscreteKernelSpace(_set_diagonal(kernel, diagonal), _weights(rng, points, weights), coords)


def _perturbed_space(
    seed: int,
    factor: float = 1e3,
    base: str = 'riesz',
    **kwargs,
) -> DiscreteKernelSpace:
    """One symmetric off-diagonal pair of the base space divided by factor.

    The reciprocal distance of that pair is inflated, so the triangle through
    any third point fails by roughly factor.
    """
    space = get_space_factory(base)(seed=seed, **kwargs)
    rng = np.random.default_rng(seed + 1)
    i, j = rng.choice(space.size, size=2, replace=False)
    kernel = np.array(space.kernel)
    kernel[i, j] /= factor
    kernel[j, i] = kernel[i, j]
    return DiscreteKernelSpace(kernel, space.weights, space.coords, space.labels)


_SPACE_FACTORIES: dict = {
    'riesz': _riesz_space,
    'three-point': _three_point_space,
    'identity': _identity_space,
    'power-distance': _power_distance_space,
    'perturbed': _perturbed_space,
}


def register_space_factory(name: str, func: callable):
    if name not in _SPACE_FACTORIES.keys():
        _SPACE_FACTORIES[name] = func


def get_space_factory(name: str) -> callable:
    if name in _SPACE_FACTORIES.keys():
        return _SPACE_FACTORIES[name]
    else:
        key_str = "\n\t".join(_SPACE_FACTORIES.keys())
        raise ValueError(
            f"'{name}' is not a registered kernel space. Available spaces are:\n\t{key_str}"
        )
