"""
Discrete Fourier transforms over the last axis of real or complex data.

All H modes are returned; nothing is truncated.
"""

from dataclasses import dataclass

import numpy as np

from errors import DataError


@dataclass(frozen=True)
class ComplexSignal:
    real: np.ndarray
    imag: np.ndarray

    def __post_init__(self):
        if np.shape(self.real) != np.shape(self.imag):
            raise DataError(
                f"real/imag length mismatch: {np.shape(self.real)} vs {np.shape(self.imag)}"
            )

    @property
    def length(self) -> int:
        return int(np.shape(self.real)[-1])

    def as_complex(self) -> np.ndarray:
        return np.asarray(self.real) + 1j * np.asarray(self.imag)


def _check_nonempty(x: np.ndarray):
    if x.ndim == 0 or x.shape[-1] == 0:
        raise DataError("FFT input must have at least one sample along the last axis")


def fft_forward(x) -> ComplexSignal:
    x = np.asarray(x, dtype=np.float64)
    _check_nonempty(x)
    spectrum = np.fft.fft(x, axis=-1)
    return ComplexSignal(spectrum.real.copy(), spectrum.imag.copy())


def fft_inverse(signal: ComplexSignal) -> ComplexSignal:
    z = signal.as_complex()
    _check_nonempty(z)
    spatial = np.fft.ifft(z, axis=-1)
    return ComplexSignal(spatial.real.copy(), spatial.imag.copy())


def fft_real_imag(x: np.ndarray):
    """(Re FFT(x), Im FFT(x)) for real x"""
    spectrum = np.fft.fft(x, axis=-1)
    return spectrum.real, spectrum.imag


def ifft_real(z_real: np.ndarray, z_imag: np.ndarray) -> np.ndarray:
    """Re iFFT(z_real + i z_imag) with 1/H normalization"""
    return np.fft.ifft(z_real + 1j * z_imag, axis=-1).real
