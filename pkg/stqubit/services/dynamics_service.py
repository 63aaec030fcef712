"""
Rotating-frame dynamics service.

Propagates the driven three-level ST qubit in the interaction frame of H_ST,
with or without the rotating-wave approximation, and runs Monte-Carlo gate
fidelities of the two-level model under sampled detuning noise.

Matrices in this module use the level order (f, e, g). The qubit block is
(e, g) = (|0>, |1>), indices 1 and 2.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np

from stqubit.metrics import record_realizations
from stqubit.schemas import E, F, G, EigenSystem, PulseSequence, RotatingFrameModel, SpectralModel
from stqubit.schemas.enums import FilterConventionEnum
from stqubit.services.filter_service import FilterService
from stqubit.services.noise_service import get_noise_service
from stqubit.services.pulse_service import (
    average_gate_fidelity,
    get_pulse_service,
    su2_exponential,
    trace_fidelity,
)
from stqubit.utils.error_handlers import ValidationError
from stqubit.utils.validators import validate_realizations, validate_seed

logger = logging.getLogger(__name__)

LEVEL_ORDER = (F, E, G)
QUBIT_BLOCK = slice(1, 3)


def frame_dipole(eigen: EigenSystem) -> Tuple[np.ndarray, np.ndarray]:
    """
    Energies and dipole matrix in (f, e, g) order.

    |e> is rephased so that d_eg is real and positive, which makes a drive
    phase phi rotate about (cos phi, sin phi, 0).
    """
    order = list(LEVEL_ORDER)
    energies = np.asarray(eigen.energies)[order]
    dipole = np.asarray(eigen.dipole, dtype=complex)[np.ix_(order, order)]
    d_eg = dipole[1, 2]
    gauge = np.ones(3, dtype=complex)
    if abs(d_eg) > 0:
        gauge[1] = d_eg / abs(d_eg)
    dipole = np.conj(gauge)[:, None] * dipole * gauge[None, :]
    return energies, dipole


def step_unitaries(hamiltonians: np.ndarray, dt: np.ndarray) -> np.ndarray:
    """exp(-i H dt) for a stack of Hermitian matrices."""
    w, v = np.linalg.eigh(hamiltonians)
    phases = np.exp(-1j * w * np.asarray(dt)[..., None])
    return (v * phases[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


class DynamicsService:
    """Service for time-domain propagation of the driven qubit."""

    STEPS_PER_PERIOD = 40
    CHUNK_STEPS = 8192
    CONVERGENCE_TOLERANCE = 1e-8
    TRACE_TOLERANCE = 1e-9
    MC_CHUNK = 100

    def __init__(self):
        self.pulses = get_pulse_service()
        self.noise = get_noise_service()

    # ---------------------------------------------------------------- Hamiltonian

    @staticmethod
    def rabi_frequency(model: RotatingFrameModel) -> float:
        _, dipole = frame_dipole(model.eigen)
        return float(model.drive.eps_ac * np.real(dipole[1, 2]))

    def h_rot(
        self, model: RotatingFrameModel, t: float, phi: float = 0.0, delta: float = 0.0
    ) -> np.ndarray:
        """
        Interaction-frame Hamiltonian at time t.

        Full model: eps_ac cos(w t + phi) d_mn exp(i (E_m - E_n) t) plus level
        shifts d_nn * delta. With rwa the (e, g) block is
        (Omega0/2)(cos phi X + sin phi Y) + (delta/2) Z and |f> is decoupled;
        delta is then the qubit-frequency offset itself.

        Args:
            model: Rotating-frame model
            t: Time (ns)
            phi: Drive phase
            delta: Detuning noise value at t

        Returns:
            3x3 Hermitian matrix in (f, e, g) order
        """
        return self._hamiltonians(
            model, np.array([t], dtype=float), np.array([phi]), np.array([delta])
        )[0]

    def _hamiltonians(
        self,
        model: RotatingFrameModel,
        times: np.ndarray,
        phis: np.ndarray,
        deltas: np.ndarray,
    ) -> np.ndarray:
        energies, dipole = frame_dipole(model.eigen)
        eps_ac = model.drive.eps_ac
        omega = model.drive.omega
        h = np.zeros((len(times), 3, 3), dtype=complex)

        if model.rwa:
            omega_q = energies[1] - energies[2]
            coupling = eps_ac * np.real(dipole[1, 2]) / 2
            h[:, 1, 2] = coupling * np.exp(-1j * phis) * np.exp(1j * (omega_q - omega) * times)
            h[:, 2, 1] = np.conj(h[:, 1, 2])
            h[:, 1, 1] = deltas / 2
            h[:, 2, 2] = -deltas / 2
            return h

        gaps = energies[:, None] - energies[None, :]
        drive = eps_ac * np.cos(omega * times + phis)
        h = drive[:, None, None] * dipole[None] * np.exp(1j * gaps[None] * times[:, None, None])
        shifts = np.real(np.diag(dipole))
        h[:, np.arange(3), np.arange(3)] += deltas[:, None] * shifts[None, :]
        return h

    def default_dt(self, model: RotatingFrameModel, steps_per_period: Optional[int] = None) -> float:
        """Step resolving the fastest frequency in the model by steps_per_period."""
        steps = steps_per_period or self.STEPS_PER_PERIOD
        energies, _ = frame_dipole(model.eigen)
        if model.rwa:
            omega_q = energies[1] - energies[2]
            fastest = max(self.rabi_frequency(model), abs(omega_q - model.drive.omega))
        else:
            fastest = model.drive.omega + float(np.max(energies) - np.min(energies))
        return 2 * math.pi / (fastest * steps)

    # ---------------------------------------------------------------- stepping

    def _schedule(
        self, model: RotatingFrameModel, sequence: PulseSequence, dt: float
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Midpoint times, step lengths and drive phases aligned to segment edges.

        Segment durations use the model's Rabi frequency.
        """
        sequence = sequence.with_omega0(self.rabi_frequency(model))
        mids: List[np.ndarray] = []
        steps: List[np.ndarray] = []
        phis: List[np.ndarray] = []
        start = 0.0
        for segment in sequence.segments:
            duration = segment.duration
            if duration <= 0:
                continue
            n = max(1, math.ceil(duration / dt - 1e-9))
            h = duration / n
            mids.append(start + h * (np.arange(n) + 0.5))
            steps.append(np.full(n, h))
            phis.append(np.full(n, segment.phi))
            start += duration
        if not mids:
            return np.zeros(0), np.zeros(0), np.zeros(0)
        return np.concatenate(mids), np.concatenate(steps), np.concatenate(phis)

    def _noise_at(self, model: RotatingFrameModel, times: np.ndarray) -> np.ndarray:
        trace = model.noise_injection
        if trace is None:
            return np.zeros_like(times)
        if len(times) and times[-1] > trace.times[-1] + 1e-9 * max(trace.dt, 1.0):
            raise ValidationError(
                f"Noise trace ends at {trace.times[-1]:.3f} ns but the sequence needs "
                f"{times[-1]:.3f} ns",
                field="noise_injection",
            )
        return np.interp(times, trace.times, trace.samples)

    def _iter_step_unitaries(
        self, model: RotatingFrameModel, sequence: PulseSequence, dt: float
    ):
        mids, steps, phis = self._schedule(model, sequence, dt)
        deltas = self._noise_at(model, mids)
        for start in range(0, len(mids), self.CHUNK_STEPS):
            window = slice(start, start + self.CHUNK_STEPS)
            hams = self._hamiltonians(model, mids[window], phis[window], deltas[window])
            yield mids[window] + steps[window] / 2, step_unitaries(hams, steps[window])

    def _check_resonance(self, model: RotatingFrameModel) -> None:
        omega_q = model.eigen.omega_q
        if not math.isclose(model.drive.omega, omega_q, rel_tol=1e-9):
            logger.warning(
                f"Drive at {model.drive.omega:.6f} rad/ns is off resonance "
                f"(omega_q = {omega_q:.6f} rad/ns)"
            )

    def propagate(
        self,
        model: RotatingFrameModel,
        sequence: PulseSequence,
        rho0: np.ndarray,
        dt: Optional[float] = None,
        check_convergence: bool = False,
    ) -> Dict[str, object]:
        """
        Density-matrix trajectory under the piecewise drive.

        Each step applies exp(-i H(t_mid) dt), the second-order Magnus
        propagator. Segment durations follow from the model's Rabi frequency.

        Args:
            model: Rotating-frame model
            sequence: Pulse sequence (phases and areas)
            rho0: Initial 3x3 density matrix in (f, e, g) order
            dt: Target step (default resolves the fastest frequency)
            check_convergence: Rerun with dt/2 and compare final populations

        Returns:
            Dict with times, rho (trajectory), final, converged and convergence_change
        """
        self._check_resonance(model)
        dt = dt or self.default_dt(model)
        rho = np.asarray(rho0, dtype=complex)
        times = [0.0]
        states = [rho]
        max_trace_error = 0.0

        for ends, unitaries in self._iter_step_unitaries(model, sequence, dt):
            for t_end, u in zip(ends, unitaries):
                rho = u @ rho @ u.conj().T
                times.append(float(t_end))
                states.append(rho)
            max_trace_error = max(max_trace_error, abs(np.trace(rho).real - np.trace(rho0).real))

        if max_trace_error > self.TRACE_TOLERANCE:
            logger.warning(f"Trace drifted by {max_trace_error:.2e} during propagation")

        result: Dict[str, object] = {
            "times": np.asarray(times),
            "rho": np.asarray(states),
            "final": rho,
            "converged": True,
            "convergence_change": 0.0,
        }

        if check_convergence:
            fine = self.propagate(model, sequence, rho0, dt=dt / 2)["final"]
            change = float(np.max(np.abs(np.real(np.diag(fine) - np.diag(rho)))))
            result["converged"] = change < self.CONVERGENCE_TOLERANCE
            result["convergence_change"] = change
            if not result["converged"]:
                logger.warning(f"Step halving changed final populations by {change:.2e}")

        return result

    def gate_unitary(
        self, model: RotatingFrameModel, sequence: PulseSequence, dt: Optional[float] = None
    ) -> np.ndarray:
        """3x3 interaction-frame propagator of the whole sequence."""
        dt = dt or self.default_dt(model)
        unitary = np.eye(3, dtype=complex)
        for _, unitaries in self._iter_step_unitaries(model, sequence, dt):
            for u in unitaries:
                unitary = u @ unitary
        return unitary

    @staticmethod
    def block_fidelity(unitary: np.ndarray, target: np.ndarray) -> float:
        """Average gate fidelity (d=2) of the qubit block; leakage lowers it."""
        return average_gate_fidelity(unitary[QUBIT_BLOCK, QUBIT_BLOCK], target)

    def leakage_run(
        self,
        model: RotatingFrameModel,
        sequence: PulseSequence,
        dt: Optional[float] = None,
        check_convergence: bool = False,
    ) -> Dict[str, object]:
        """
        Populations of |0>, |1> and |f> starting from |0> = |e>.

        Returns:
            Dict with t, p0, p1, pf arrays plus max_pf, final_p0 and converged
        """
        rho0 = np.zeros((3, 3), dtype=complex)
        rho0[1, 1] = 1.0
        run = self.propagate(model, sequence, rho0, dt, check_convergence)
        rho = run["rho"]
        pops = np.real(np.einsum("tii->ti", rho))
        result = {
            "t": run["times"],
            "p0": pops[:, 1],
            "p1": pops[:, 2],
            "pf": pops[:, 0],
            "max_pf": float(np.max(pops[:, 0])),
            "final_p0": float(pops[-1, 1]),
            "converged": run["converged"],
            "convergence_change": run["convergence_change"],
        }
        logger.info(
            f"Leakage run: max P_f = {result['max_pf']:.3e}, final P_0 = {result['final_p0']:.3e}"
        )
        return result

    # ---------------------------------------------------------------- Monte Carlo

    def _two_level_schedule(
        self, sequence: PulseSequence, dt: float
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        mids: List[np.ndarray] = []
        steps: List[np.ndarray] = []
        fields: List[np.ndarray] = []
        start = 0.0
        for segment in sequence.segments:
            duration = segment.duration
            if duration <= 0:
                continue
            n = max(1, math.ceil(duration / dt - 1e-9))
            h = duration / n
            mids.append(start + h * (np.arange(n) + 0.5))
            steps.append(np.full(n, h))
            field = [segment.omega0 * math.cos(segment.phi) / 2, segment.omega0 * math.sin(segment.phi) / 2]
            fields.append(np.tile(field, (n, 1)))
            start += duration
        return np.concatenate(mids), np.concatenate(steps), np.concatenate(fields)

    def _chunk_fidelities(
        self,
        sequence: PulseSequence,
        target: np.ndarray,
        deltas: np.ndarray,
        schedule: Tuple[np.ndarray, np.ndarray, np.ndarray],
        use_trace: bool,
    ) -> np.ndarray:
        """Fidelities for a block of realizations; deltas is (R, steps)."""
        _, steps, fields = schedule
        n_real = deltas.shape[0]
        unitary = np.broadcast_to(np.eye(2, dtype=complex), (n_real, 2, 2)).copy()
        h = np.zeros((n_real, 3))
        for k in range(len(steps)):
            h[:, 0] = fields[k, 0]
            h[:, 1] = fields[k, 1]
            h[:, 2] = deltas[:, k] / 2
            unitary = su2_exponential(h, steps[k]) @ unitary
        metric = trace_fidelity if use_trace else average_gate_fidelity
        return np.array([metric(u, target) for u in unitary])

    def monte_carlo_fidelity(
        self,
        sequence: PulseSequence,
        model: Optional[SpectralModel],
        n_realizations: int,
        seed: int,
        dt: Optional[float] = None,
        quasi_static_sigma: Optional[float] = None,
        use_trace: bool = False,
        threads: int = 1,
        convention: Optional[FilterConventionEnum] = None,
    ) -> Dict[str, object]:
        """
        Mean gate fidelity of the two-level model under sampled detuning noise.

        Realization i uses seed + i, so results do not depend on threads.

        Args:
            sequence: Pulse sequence (its omega0 sets the Rabi rate)
            model: Noise spectrum for time-dependent traces
            n_realizations: Number of realizations (>= 100)
            seed: Base seed
            dt: Step (default min(pi / omega_uv, Rabi period / 40))
            quasi_static_sigma: If set, draw one constant offset per realization instead
            use_trace: Report |Tr(U_t^dag U)|/2 instead of the average gate fidelity
            threads: Worker threads over realization blocks
            convention: Rescale spectral noise so the mean is comparable with
                fidelity_from_spectrum under this convention

        Returns:
            Dict with mean, stderr, n, seed, noise_scale and the per-realization fidelities
        """
        n_realizations = validate_realizations(n_realizations)
        seed = validate_seed(seed)
        if model is None and quasi_static_sigma is None:
            raise ValidationError("Monte-Carlo run needs a spectrum or a quasi-static sigma", field="model")

        target = self.pulses.target_unitary(sequence)
        scale = 1.0
        omega0 = max(seg.omega0 for seg in sequence.segments)
        if dt is None:
            dt = 2 * math.pi / (omega0 * self.STEPS_PER_PERIOD)
            if model is not None and quasi_static_sigma is None:
                dt = min(dt, math.pi / model.omega_uv)

        if quasi_static_sigma is not None:
            offsets = self.noise.quasistatic_draws(quasi_static_sigma, n_realizations, seed)
            metric = trace_fidelity if use_trace else average_gate_fidelity
            fidelities = np.array(
                [metric(self.pulses.sequence_unitary(sequence, d), target) for d in offsets]
            )
        else:
            schedule = self._two_level_schedule(sequence, dt)
            mids = schedule[0]
            if convention is not None:
                scale = FilterService.noise_scale(model, convention, use_trace)
                logger.info(f"Noise scaled by {scale:.4f} for the {convention.value} convention")

            def run(block: range) -> np.ndarray:
                deltas = scale * np.stack(
                    [self.noise.evaluate_at(model, mids, seed + i) for i in block]
                )
                return self._chunk_fidelities(sequence, target, deltas, schedule, use_trace)

            blocks = [
                range(start, min(start + self.MC_CHUNK, n_realizations))
                for start in range(0, n_realizations, self.MC_CHUNK)
            ]
            with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
                fidelities = np.concatenate(list(executor.map(run, blocks)))

        record_realizations("mc_1q", n_realizations)
        mean = float(np.mean(fidelities))
        stderr = float(np.std(fidelities, ddof=1) / math.sqrt(n_realizations))
        logger.info(
            f"Monte-Carlo fidelity {mean:.6f} +- {stderr:.1e} over {n_realizations} realizations"
        )
        return {
            "mean": mean,
            "stderr": stderr,
            "n": n_realizations,
            "seed": seed,
            "noise_scale": scale,
            "fidelities": fidelities,
        }


def get_dynamics_service() -> DynamicsService:
    """Get dynamics service instance."""
    return DynamicsService()
