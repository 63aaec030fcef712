"""
Resonator-mediated two-qubit gate service.

Two ST qubits couple to one resonator mode. In the frame rotating at the
resonator frequency and within the RWA, the single-excitation manifold
{|eg0>, |ge0>, |gg1>} forms a Lambda system; a full Rabi cycle of its bright
state implements the entangling reflection U_ent(xi).

States are qubit1 x qubit2 x Fock(n_max), qubit levels g=0, e=1 (f=2 in the
three-level variant). Labels like "ge0" read qubit1, qubit2, photons.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import qutip as qt
from scipy.linalg import expm

from stqubit.metrics import record_realizations
from stqubit.schemas import E, F, G, CavityConfig, EigenSystem, EntanglerSpec, NoiseDraw
from stqubit.schemas.enums import FidelityMetricEnum, QubitLevelsEnum
from stqubit.utils.error_handlers import PositivityViolationError, ValidationError
from stqubit.utils.validators import validate_positive, validate_realizations, validate_seed

logger = logging.getLogger(__name__)

COMPUTATIONAL_LABELS = ("gg0", "ge0", "eg0", "ee0")
LEVEL_INDEX = {"g": 0, "e": 1, "f": 2}

Eigens = Union[EigenSystem, Tuple[EigenSystem, EigenSystem]]


def _pair(eigens: Eigens) -> Tuple[EigenSystem, EigenSystem]:
    if isinstance(eigens, EigenSystem):
        return eigens, eigens
    return eigens[0], eigens[1]


class CavityService:
    """Service for the Lambda-system entangling gate."""

    RWA_MARGIN = 10.0
    POSITIVITY_TOLERANCE = 1e-7
    MESOLVE_OPTIONS = {"atol": 1e-10, "rtol": 1e-8, "nsteps": 100_000}

    # ---------------------------------------------------------------- parameters

    @staticmethod
    def gamma_a_from_quality_factor(omega_r: float, quality_factor: float) -> float:
        """Photon loss rate Gamma_a = omega_r / Q."""
        validate_positive(quality_factor, "quality_factor")
        return validate_positive(omega_r, "omega_r") / quality_factor

    @staticmethod
    def resonator_frequency(config: CavityConfig, eigens: Eigens) -> float:
        """omega_r, defaulting to the first qubit's splitting."""
        first, _ = _pair(eigens)
        return config.omega_r if config.omega_r is not None else first.omega_q

    @staticmethod
    def couplings(config: CavityConfig, eigens: Eigens) -> Tuple[float, float]:
        """Lambda-system legs Omega_k = g_k |d_ge^(k)|."""
        first, second = _pair(eigens)
        return config.g1 * abs(first.d_ge), config.g2 * abs(second.d_ge)

    def effective_coupling(self, config: CavityConfig, eigens: Eigens) -> float:
        """
        Effective coupling Omega' = g' |d_ge| that sets the sweep's sigma axis.

        Taken from the first qubit with a nonzero leg.

        Raises:
            ValidationError: If both couplings vanish
        """
        legs = [leg for leg in self.couplings(config, eigens) if leg > 0]
        if not legs:
            raise ValidationError("At least one qubit must couple to the resonator", field="g")
        return legs[0]

    def entangler_spec(self, config: CavityConfig, eigens: Eigens) -> EntanglerSpec:
        """
        Mixing angle, effective rate and pi-condition duration.

        In the (gg0, ge0, eg0, ee0) ordering tan(xi/2) = -Omega_2/Omega_1.

        Raises:
            ValidationError: If both couplings vanish
        """
        omega_1, omega_2 = self.couplings(config, eigens)
        omega = math.hypot(omega_1, omega_2)
        if omega == 0:
            raise ValidationError("At least one qubit must couple to the resonator", field="g")
        xi = 2 * math.atan2(-omega_2, omega_1)
        return EntanglerSpec(xi=xi, omega=omega, duration=math.pi / omega)

    @staticmethod
    def entangler_unitary(xi: float) -> np.ndarray:
        """U_ent(xi) on (gg0, ge0, eg0, ee0): 1, reflection block, -1."""
        c, s = math.cos(xi), math.sin(xi)
        return np.array(
            [
                [1, 0, 0, 0],
                [0, c, s, 0],
                [0, s, -c, 0],
                [0, 0, 0, -1],
            ],
            dtype=complex,
        )

    def rwa_margin(self, config: CavityConfig, eigens: Eigens) -> float:
        """
        Smallest ratio |E_m - E_n -+ omega_r| / |g d_mn| over the dropped terms.

        Logs a warning when it falls below RWA_MARGIN.
        """
        omega_r = self.resonator_frequency(config, eigens)
        ratios: List[float] = []
        for eigen, g in zip(_pair(eigens), (config.g1, config.g2)):
            if g == 0:
                continue
            e = eigen.energies
            terms = [
                (abs(eigen.omega_q + omega_r), abs(eigen.dipole[G, E])),
                (abs(e[F] - e[E] - omega_r), abs(eigen.dipole[E, F])),
                (abs(e[F] - e[G] - omega_r), abs(eigen.dipole[G, F])),
            ]
            ratios.extend(gap / (g * d) for gap, d in terms if d > 0)
        margin = min(ratios) if ratios else math.inf
        if margin < self.RWA_MARGIN:
            logger.warning(f"RWA margin {margin:.1f} is below {self.RWA_MARGIN:.0f}x")
        return margin

    # ---------------------------------------------------------------- operators

    @staticmethod
    def _dims(config: CavityConfig) -> Tuple[int, int]:
        return config.qubit_levels.dimension, config.n_max

    def basis_state(self, config: CavityConfig, label: str) -> qt.Qobj:
        """Ket for a label such as "ge0"."""
        q, n = self._dims(config)
        return qt.tensor(
            qt.basis(q, LEVEL_INDEX[label[0]]),
            qt.basis(q, LEVEL_INDEX[label[1]]),
            qt.basis(n, int(label[2:])),
        )

    def _index(self, config: CavityConfig, label: str) -> int:
        q, n = self._dims(config)
        return (LEVEL_INDEX[label[0]] * q + LEVEL_INDEX[label[1]]) * n + int(label[2:])

    def _qubit_op(self, config: CavityConfig, qubit: int, op: qt.Qobj) -> qt.Qobj:
        q, n = self._dims(config)
        factors = [qt.qeye(q), qt.qeye(q), qt.qeye(n)]
        factors[qubit] = op
        return qt.tensor(*factors)

    def _transition(self, config: CavityConfig, qubit: int, lower: str, upper: str) -> qt.Qobj:
        q, _ = self._dims(config)
        op = qt.basis(q, LEVEL_INDEX[lower]) * qt.basis(q, LEVEL_INDEX[upper]).dag()
        return self._qubit_op(config, qubit, op)

    def _annihilation(self, config: CavityConfig) -> qt.Qobj:
        q, n = self._dims(config)
        return qt.tensor(qt.qeye(q), qt.qeye(q), qt.destroy(n))

    def noise_operators(self, config: CavityConfig) -> Tuple[qt.Qobj, qt.Qobj, qt.Qobj]:
        """Operators multiplying delta1, delta2 and delta_r in the Hamiltonian."""
        ops = []
        for qubit in (0, 1):
            shift = self._transition(config, qubit, "e", "e")
            if config.qubit_levels is QubitLevelsEnum.THREE:
                shift = shift + self._transition(config, qubit, "f", "f")
            ops.append(shift)
        a = self._annihilation(config)
        return ops[0], ops[1], a.dag() * a

    def effective_hamiltonian(
        self, config: CavityConfig, eigens: Eigens, noise: Optional[NoiseDraw] = None
    ) -> qt.Qobj:
        """
        Interaction Hamiltonian in the frame rotating at omega_r.

        H = sum_k [Delta_k |e><e|_k + Omega_k (|g><e|_k a^dag + h.c.)]
            + noise terms delta_k |e><e|_k (+ |f><f|_k) + delta_r a^dag a

        The three-level variant adds the e-f ladder coupling g_k |d_ef| with
        |f> detuned by omega_q + omega_ef - 2 omega_r.

        Args:
            config: Cavity configuration
            eigens: Eigensystem of each qubit at its operating point
            noise: Quasi-static detunings

        Returns:
            Hermitian Qobj on qubit1 x qubit2 x Fock(n_max)
        """
        noise = noise or NoiseDraw()
        omega_r = self.resonator_frequency(config, eigens)
        a = self._annihilation(config)
        three_level = config.qubit_levels is QubitLevelsEnum.THREE

        hamiltonian = 0 * a.dag() * a
        for qubit, (eigen, g) in enumerate(zip(_pair(eigens), (config.g1, config.g2))):
            detuning = eigen.omega_q - omega_r
            hamiltonian += detuning * self._transition(config, qubit, "e", "e")
            lower = self._transition(config, qubit, "g", "e")
            hamiltonian += g * abs(eigen.d_ge) * (lower * a.dag() + lower.dag() * a)

            if three_level:
                f_energy = eigen.omega_q + eigen.omega_ef - 2 * omega_r
                hamiltonian += f_energy * self._transition(config, qubit, "f", "f")
                ladder = self._transition(config, qubit, "e", "f")
                d_ef = abs(eigen.dipole[E, F])
                hamiltonian += g * d_ef * (ladder * a.dag() + ladder.dag() * a)

        n1, n2, nr = self.noise_operators(config)
        hamiltonian += noise.delta1 * n1 + noise.delta2 * n2 + noise.delta_r * nr
        return hamiltonian

    def collapse_operators(self, config: CavityConfig) -> List[qt.Qobj]:
        """sqrt(Gamma_a) a, then sqrt(Gamma_1) sigma_k and sqrt(Gamma_2) sigma_z,k per qubit."""
        ops = []
        if config.gamma_a > 0:
            ops.append(math.sqrt(config.gamma_a) * self._annihilation(config))
        for qubit in (0, 1):
            if config.gamma_1 > 0:
                ops.append(math.sqrt(config.gamma_1) * self._transition(config, qubit, "g", "e"))
            if config.gamma_2 > 0:
                sigma_z = self._transition(config, qubit, "e", "e") - self._transition(
                    config, qubit, "g", "g"
                )
                ops.append(math.sqrt(config.gamma_2) * sigma_z)
        return ops

    # ---------------------------------------------------------------- evolution

    def _check_positive(self, rho: np.ndarray) -> None:
        min_eig = float(np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)))
        if min_eig < -self.POSITIVITY_TOLERANCE:
            raise PositivityViolationError(min_eig, self.POSITIVITY_TOLERANCE)

    def evolve_lindblad(
        self,
        config: CavityConfig,
        hamiltonian: qt.Qobj,
        rho0: qt.Qobj,
        t_final: float,
        dt: float,
    ) -> Dict[str, object]:
        """
        Solve the master equation with qutip's mesolve.

        Args:
            config: Cavity configuration (decay rates)
            hamiltonian: Interaction Hamiltonian
            rho0: Initial density matrix or ket
            t_final: End time (ns)
            dt: Output spacing (ns)

        Returns:
            Dict with times and states (dense arrays)

        Raises:
            PositivityViolationError: If a state has an eigenvalue below -1e-7
        """
        n_points = max(2, math.ceil(t_final / dt - 1e-9) + 1)
        times = np.linspace(0.0, t_final, n_points)
        if rho0.isket:
            rho0 = qt.ket2dm(rho0)

        result = qt.mesolve(
            hamiltonian,
            rho0,
            times,
            c_ops=self.collapse_operators(config),
            options=dict(self.MESOLVE_OPTIONS),
        )
        states = [state.full() for state in result.states]
        for rho in states:
            self._check_positive(rho)

        logger.debug(f"mesolve: {n_points} points to t = {t_final:.3f} ns")
        return {"times": times, "states": states}

    def populations(
        self,
        config: CavityConfig,
        eigens: Eigens,
        points: int = 201,
        noise: Optional[NoiseDraw] = None,
    ) -> Dict[str, np.ndarray]:
        """
        P_ge0, P_eg0 and P_gg1 over one entangler duration starting from |ge0>.

        Returns:
            Dict of arrays keyed t_ns, p_ge0, p_eg0, p_gg1
        """
        self.rwa_margin(config, eigens)
        spec = self.entangler_spec(config, eigens)
        hamiltonian = self.effective_hamiltonian(config, eigens, noise)
        dt = spec.duration / max(points - 1, 1)
        run = self.evolve_lindblad(
            config, hamiltonian, self.basis_state(config, "ge0"), spec.duration, dt
        )
        states = np.asarray(run["states"])
        pops = {
            label: np.real(states[:, idx, idx])
            for label, idx in (
                (label, self._index(config, label)) for label in ("ge0", "eg0", "gg1")
            )
        }
        logger.info(f"Final P_eg0 = {pops['eg0'][-1]:.6f} after {spec.duration:.3f} ns")
        return {
            "t_ns": run["times"],
            "p_ge0": pops["ge0"],
            "p_eg0": pops["eg0"],
            "p_gg1": pops["gg1"],
        }

    # ---------------------------------------------------------------- channel

    def liouvillian_terms(
        self, config: CavityConfig, eigens: Eigens
    ) -> Tuple[np.ndarray, Tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Noise-free Liouvillian and the generators linear in delta1, delta2, delta_r."""
        base = qt.liouvillian(
            self.effective_hamiltonian(config, eigens), self.collapse_operators(config)
        ).full()
        noise = tuple(qt.liouvillian(op).full() for op in self.noise_operators(config))
        return base, noise

    def _computational_block(
        self, config: CavityConfig, propagator: np.ndarray
    ) -> np.ndarray:
        """X[i, j, a, b] = <a| Lambda(|i><j|) |b> on the computational states."""
        q, n = self._dims(config)
        dim = q * q * n
        comp = np.array([self._index(config, label) for label in COMPUTATIONAL_LABELS])
        # Column-stacked vec: |r><c| -> r + c * dim
        cols = (comp[:, None] + comp[None, :] * dim).ravel()
        rows = (comp[:, None] + comp[None, :] * dim).ravel()
        block = propagator[np.ix_(rows, cols)]
        d = len(comp)
        return block.reshape(d, d, d, d).transpose(2, 3, 0, 1)

    @staticmethod
    def block_gate_fidelity(block: np.ndarray, target: np.ndarray) -> float:
        """
        Average gate fidelity (dF_pro + p)/(d + 1) of a projected block map.

        p is the mean probability of staying in the block.
        """
        d = target.shape[0]
        f_pro = np.real(np.einsum("ai,ijab,bj->", np.conj(target), block, target)) / d**2
        p = np.real(np.einsum("iiaa->", block)) / d
        return float((d * f_pro + p) / (d + 1))

    def channel(
        self,
        base: np.ndarray,
        noise_terms: Sequence[np.ndarray],
        draw: NoiseDraw,
        duration: float,
    ) -> np.ndarray:
        """Superoperator exp(L t) for one quasi-static draw."""
        generator = (
            base
            + draw.delta1 * noise_terms[0]
            + draw.delta2 * noise_terms[1]
            + draw.delta_r * noise_terms[2]
        )
        return expm(generator * duration)

    def noise_draws(
        self, config: CavityConfig, sigma: float, n: int, seed: int
    ) -> List[NoiseDraw]:
        """
        Quasi-static detunings with standard deviation sigma.

        The same standard normals are rescaled for every sigma, so sweeps over
        sigma use common random numbers.
        """
        rng = np.random.default_rng(validate_seed(seed))
        z = rng.standard_normal((n, 3))
        draws = []
        for z1, z2, zr in z:
            delta1 = sigma * z1
            delta2 = delta1 if config.correlated_noise else sigma * z2
            delta_r = sigma * zr if config.resonator_noise else 0.0
            draws.append(NoiseDraw(delta1=delta1, delta2=delta2, delta_r=delta_r))
        return draws

    def realization_fidelity(
        self,
        config: CavityConfig,
        base: np.ndarray,
        noise_terms: Sequence[np.ndarray],
        draw: NoiseDraw,
        spec: EntanglerSpec,
        metric: FidelityMetricEnum = FidelityMetricEnum.GATE,
    ) -> float:
        """Gate or transfer fidelity of one quasi-static realization."""
        propagator = self.channel(base, noise_terms, draw, spec.duration)
        block = self._computational_block(config, propagator)

        ge0 = COMPUTATIONAL_LABELS.index("ge0")
        eg0 = COMPUTATIONAL_LABELS.index("eg0")
        self._check_positive(block[ge0, ge0])

        if metric is FidelityMetricEnum.TRANSFER:
            return float(np.real(block[ge0, ge0, eg0, eg0]))
        return self.block_gate_fidelity(block, self.entangler_unitary(spec.xi))

    def fidelity_sweep(
        self,
        config: CavityConfig,
        eigens: Eigens,
        sigma_over_g: Sequence[float],
        n_realizations: int = 1000,
        seed: int = 0,
        metric: FidelityMetricEnum = FidelityMetricEnum.GATE,
        threads: int = 1,
        coupling_scale: Optional[float] = None,
    ) -> Dict[str, np.ndarray]:
        """
        Mean entangler fidelity versus sigma / g'.

        sigma is measured in units of the effective coupling Omega' = g' |d_ge|
        unless coupling_scale fixes the unit, which lets two devices share one
        absolute axis. Each realization propagates exp(L t) at the noise-free
        pi condition.

        Args:
            config: Cavity configuration
            eigens: Eigensystem of each qubit
            sigma_over_g: Noise levels
            n_realizations: Realizations per level (>= 100)
            seed: Seed of the standard normals
            metric: GATE (d=4 average gate fidelity) or TRANSFER (|ge0> -> |eg0>)
            threads: Worker threads over realizations
            coupling_scale: Unit of sigma in rad/ns (default effective_coupling)

        Returns:
            Dict of arrays keyed sigma_over_g, mean_fidelity, stderr, n
        """
        n_realizations = validate_realizations(n_realizations)
        self.rwa_margin(config, eigens)
        spec = self.entangler_spec(config, eigens)
        base, noise_terms = self.liouvillian_terms(config, eigens)
        if coupling_scale is None:
            coupling_scale = self.effective_coupling(config, eigens)
        scale = validate_positive(coupling_scale, "coupling_scale")

        means, errors = [], []
        logger.info(
            f"Sweeping {len(sigma_over_g)} noise levels x {n_realizations} realizations "
            f"({metric.value} metric, duration {spec.duration:.3f} ns)"
        )
        with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
            for ratio in sigma_over_g:
                draws = self.noise_draws(config, ratio * scale, n_realizations, seed)
                values = np.fromiter(
                    executor.map(
                        lambda draw: self.realization_fidelity(
                            config, base, noise_terms, draw, spec, metric
                        ),
                        draws,
                    ),
                    dtype=float,
                    count=n_realizations,
                )
                means.append(float(np.mean(values)))
                errors.append(float(np.std(values, ddof=1) / math.sqrt(n_realizations)))
                logger.info(f"sigma/g' = {ratio:.3f}: F = {means[-1]:.5f} +- {errors[-1]:.1e}")

        record_realizations("cavity", n_realizations * len(sigma_over_g))
        return {
            "sigma_over_g": np.asarray(sigma_over_g, dtype=float),
            "mean_fidelity": np.asarray(means),
            "stderr": np.asarray(errors),
            "n": np.full(len(sigma_over_g), n_realizations),
        }


def get_cavity_service() -> CavityService:
    """Get cavity service instance."""
    return CavityService()
