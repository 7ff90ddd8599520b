import numpy as np
import pytest

from pwframes.masks import WaveletSystem, derive_chain, wavelet_spectra
from pwframes.spectra import DyadicSequence, Spectrum


def random_mask(rng, level, min_mod=0.1):
    """Random level mask with moduli bounded away from zero."""
    size = 1 << level
    mod = rng.uniform(min_mod, 1.0, size)
    phase = rng.uniform(-np.pi, np.pi, size)
    return DyadicSequence(level, mod * np.exp(1j * phase))


def random_chain(rng, top_level, support=24, min_mod=0.1):
    """Chain derived from a random nonvanishing top spectrum and masks."""
    coeffs = rng.standard_normal(2 * support + 1) + 1j * rng.standard_normal(2 * support + 1)
    coeffs += np.sign(coeffs.real + 1e-9)  # keep magnitudes away from zero
    top = Spectrum(-support, coeffs)
    masks = {lvl: random_mask(rng, lvl, min_mod) for lvl in range(2, top_level + 1)}
    return derive_chain(top, masks, top_level)


def random_system(rng, chain, rho=2):
    """Random wavelet masks (rho generators per level) over the chain."""
    masks = []
    for j in range(chain.top_level):
        masks.append(tuple(random_mask(rng, j + 1, 0.0) for _ in range(rho)))
    return wavelet_spectra(chain, WaveletSystem(tuple(masks)))


@pytest.fixture(scope="session")
def haar12():
    """Haar chain and system at horizon 12 with support 128 (acceptance scale)."""
    from pwframes.haar import haar_chain, haar_system

    chain = haar_chain(12, 128)
    return chain, haar_system(chain)
