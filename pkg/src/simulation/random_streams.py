"""
Module random_streams.py

Flux aléatoires reproductibles : générateur PCG64 de numpy, tirages
bufferisés pour les boucles d'événements, et dérivation de graines par
SeedSequence pour séparer les flux (initialisation, dynamique, graphes,
répétitions d'un ensemble).
"""

import numpy as np

# Clés de séparation des flux dérivés d'une graine de base
INIT_STREAM = 0
DYNAMICS_STREAM = 1
RUN_STREAM = 2
GRAPH_STREAM = 3


def derive_seed(base: int, *keys: int) -> int:
    """
    Graine 64 bits dérivée de (base, *keys) ; portable entre plateformes.
    """
    if base < 0 or any(key < 0 for key in keys):
        raise ValueError(f"Seeds and stream keys must be non-negative, got {base}, {keys}")
    state = np.random.SeedSequence([int(base), *map(int, keys)]).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])


class RandomStream:
    """
    Tirages uniformes bufferisés à partir d'un Generator PCG64.

    Args:
        seed: Graine entière non négative
        buffer_size: Nombre de tirages générés d'un coup
    """

    def __init__(self, seed: int, buffer_size: int = 8192):
        self.seed = seed
        self.generator = np.random.Generator(np.random.PCG64(seed))
        self._buffer_size = buffer_size
        self._buffer = []
        self._position = 0

    def uniform(self) -> float:
        """Tirage dans [0, 1)."""
        if self._position >= len(self._buffer):
            self._buffer = self.generator.random(self._buffer_size).tolist()
            self._position = 0
        value = self._buffer[self._position]
        self._position += 1
        return value

    def index(self, n: int) -> int:
        """Entier uniforme dans [0, n)."""
        return min(int(self.uniform() * n), n - 1)
