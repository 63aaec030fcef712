"""
Charge-noise service.

Calibrates 1/f^alpha spectral models against a target qubit-frequency
standard deviation, synthesizes time-domain realizations as sums of
random-phase cosines on a logarithmic frequency grid, and estimates spectra.
"""

import logging
import math
from typing import Tuple

import numpy as np
from scipy.signal import welch

from stqubit.schemas import NoiseTrace, SpectralModel
from stqubit.schemas.enums import NoiseModeEnum
from stqubit.utils.error_handlers import ResolutionError, TooShortError
from stqubit.utils.validators import validate_cutoffs, validate_positive, validate_seed

logger = logging.getLogger(__name__)


class NoiseService:
    """Service for 1/f^alpha detuning noise."""

    POINTS_PER_DECADE = 40
    MIN_PSD_SAMPLES = 1024
    CHUNK_SAMPLES = 4096

    # ---------------------------------------------------------------- calibration

    @staticmethod
    def band_integral(alpha: float, t0: float, lower: float, upper: float) -> np.ndarray:
        """Integral of (w t0)^-alpha over [lower, upper]; vectorized over the bounds."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if math.isclose(alpha, 1.0):
            return np.log(upper / lower) / t0
        p = 1.0 - alpha
        return (np.power(upper, p) - np.power(lower, p)) / (p * t0**alpha)

    def calibrate_amplitude(self, sigma: float, model: SpectralModel) -> float:
        """
        PSD amplitude A whose band integral equals kappa * sigma^2.

        kappa is pi for the default normalization (2pi for the two-sided one).

        Args:
            sigma: Target standard deviation of delta(t) (rad/ns)
            model: Spectral model; its amplitude is ignored

        Returns:
            Amplitude A

        Raises:
            ValidationError: If sigma is negative
            CutoffOrderError: If the cutoffs are not ordered
        """
        sigma = validate_positive(sigma, "sigma", allow_zero=True)
        validate_cutoffs(model.omega_ir, model.omega_uv)
        if sigma == 0.0:
            return 0.0

        band = float(self.band_integral(model.alpha, model.t0, model.omega_ir, model.omega_uv))
        amplitude = model.kappa * sigma**2 / band

        logger.info(
            f"Calibrated A = {amplitude:.4e} (A*t0 = {amplitude * model.t0:.3e}) "
            f"for sigma = {sigma:.4e} rad/ns"
        )
        return amplitude

    def sigma_from_amplitude(self, model: SpectralModel) -> float:
        """Standard deviation of delta(t) implied by a spectral model."""
        band = float(self.band_integral(model.alpha, model.t0, model.omega_ir, model.omega_uv))
        return math.sqrt(model.amplitude_a * band / model.kappa)

    # ---------------------------------------------------------------- synthesis

    def frequency_bins(self, model: SpectralModel) -> Tuple[np.ndarray, np.ndarray]:
        """
        Logarithmic bin edges and the exact PSD power inside each bin.

        Returns:
            Tuple of (edges, bin_power)
        """
        decades = math.log10(model.omega_uv / model.omega_ir)
        n_bins = max(1, math.ceil(decades * self.POINTS_PER_DECADE))
        edges = np.geomspace(model.omega_ir, model.omega_uv, n_bins + 1)
        power = model.amplitude_a * self.band_integral(model.alpha, model.t0, edges[:-1], edges[1:])
        return edges, power

    @staticmethod
    def _sample_in_bins(edges: np.ndarray, alpha: float, u: np.ndarray) -> np.ndarray:
        """Draw one frequency per bin with density proportional to w^-alpha."""
        lower, upper = edges[:-1], edges[1:]
        if math.isclose(alpha, 1.0):
            return lower * np.power(upper / lower, u)
        p = 1.0 - alpha
        return np.power(lower**p + u * (upper**p - lower**p), 1.0 / p)

    def generate_trace(self, model: SpectralModel, dt: float, n: int, seed: int) -> NoiseTrace:
        """
        One realization of detuning noise sampled every dt.

        delta(t) = sum_k sqrt(2 P_k / kappa) cos(w_k t + phi_k), with P_k the PSD power
        of log bin k and w_k drawn inside the bin, so the ensemble variance is
        (1/kappa) * integral(S).

        Args:
            model: Spectral model
            dt: Sampling step (ns), at most pi / omega_uv
            n: Number of samples (>= 2)
            seed: RNG seed

        Returns:
            NoiseTrace

        Raises:
            ResolutionError: If dt is too coarse for omega_uv
        """
        dt_max = math.pi / model.omega_uv
        if dt > dt_max * (1 + 1e-12):
            raise ResolutionError(dt, dt_max)
        n = max(int(n), 2)

        samples = self.evaluate_at(model, dt * np.arange(n), seed)
        return NoiseTrace(dt=dt, samples=samples, seed=seed)

    def evaluate_at(self, model: SpectralModel, times: np.ndarray, seed: int) -> np.ndarray:
        """
        The realization drawn from seed, evaluated at arbitrary times.

        generate_trace(model, dt, n, seed) equals evaluate_at(model, dt * arange(n), seed).
        """
        seed = validate_seed(seed)
        times = np.asarray(times, dtype=float)
        rng = np.random.default_rng(seed)

        if model.mode is NoiseModeEnum.QUASI_STATIC:
            value = rng.normal(0.0, self.sigma_from_amplitude(model))
            return np.full(times.shape, value)

        edges, power = self.frequency_bins(model)
        amplitudes = np.sqrt(2.0 * power / model.kappa)
        omegas = self._sample_in_bins(edges, model.alpha, rng.random(len(power)))
        phases = rng.uniform(0.0, 2 * math.pi, len(power))

        flat = times.ravel()
        samples = np.zeros(len(flat))
        if model.amplitude_a > 0:
            for start in range(0, len(flat), self.CHUNK_SAMPLES):
                t = flat[start : start + self.CHUNK_SAMPLES]
                samples[start : start + len(t)] = np.cos(np.outer(t, omegas) + phases) @ amplitudes
        return samples.reshape(times.shape)

    def generate_ensemble(
        self, model: SpectralModel, dt: float, n: int, n_realizations: int, base_seed: int
    ) -> np.ndarray:
        """Traces for seeds base_seed + i, stacked as rows."""
        return np.stack(
            [
                self.generate_trace(model, dt, n, base_seed + i).samples
                for i in range(n_realizations)
            ]
        )

    @staticmethod
    def quasistatic_draws(sigma: float, n: int, seed: int) -> np.ndarray:
        """Independent Gaussian offsets with standard deviation sigma."""
        rng = np.random.default_rng(validate_seed(seed))
        return rng.normal(0.0, sigma, size=n)

    # ---------------------------------------------------------------- estimation

    def psd_estimate(self, trace: NoiseTrace, nperseg: int = 0) -> Tuple[np.ndarray, np.ndarray]:
        """
        Welch-averaged one-sided PSD in angular frequency.

        The estimate integrates over omega to the sample variance.

        Args:
            trace: Noise trace with at least 1024 samples
            nperseg: Segment length (default n // 8, at least 256)

        Returns:
            Tuple of (omega, psd)

        Raises:
            TooShortError: If the trace is shorter than 1024 samples
        """
        n = len(trace.samples)
        if n < self.MIN_PSD_SAMPLES:
            raise TooShortError(n, self.MIN_PSD_SAMPLES)

        if nperseg <= 0:
            nperseg = max(256, n // 8)
        nperseg = min(nperseg, n)

        freq, psd = welch(
            trace.samples,
            fs=1.0 / trace.dt,
            window="hann",
            nperseg=nperseg,
            detrend=False,
            scaling="density",
        )
        return 2 * math.pi * freq, psd / (2 * math.pi)


def get_noise_service() -> NoiseService:
    """Get noise service instance."""
    return NoiseService()
