"""Counter-based seeding: every random draw is keyed by (seed, frame, purpose)."""
import numpy as np

# purpose tags
BITS = 1
UE_CHANNEL = 2
JAM_CHANNEL = 3
JAM_SYMBOLS = 4
NOISE = 5
STEP = 6


def derive(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream identified by ``(seed, *key)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


def derive_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence([int(seed), *map(int, key)]).generate_state(1)[0])


def crandn(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with variance ``var``."""
    z = rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,))
    return np.sqrt(var / 2) * (z[..., 0] + 1j * z[..., 1])
