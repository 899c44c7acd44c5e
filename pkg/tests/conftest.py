import numpy as np
import pytest

from core.braid_words import LoopBraidWord, word_from_tokens


def random_loop_words(count: int = 20, seed: int = 0, max_strands: int = 4, max_length: int = 6):
    """Seeded corpus of small loop words mixing sigma and rho letters of both signs."""
    rng = np.random.default_rng(seed)
    words = []
    for _ in range(count):
        strands = int(rng.integers(2, max_strands + 1))
        length = int(rng.integers(1, max_length + 1))
        letters = [
            (
                "sigma" if rng.random() < 0.5 else "rho",
                int(rng.integers(1, strands)),
                1 if rng.random() < 0.5 else -1,
            )
            for _ in range(length)
        ]
        words.append(word_from_tokens(strands, letters, loop=True))
    return words


@pytest.fixture(scope="session")
def loop_corpus():
    words = random_loop_words()
    assert all(isinstance(w, LoopBraidWord) for w in words)
    return words
