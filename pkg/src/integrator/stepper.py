"""Time-stepping schemes for the g and z formulations.

Both schemes advance a tuple of spectral fields. `ExplicitRK4` is the
classical fourth-order Runge-Kutta method on the full right-hand side.
`IntegratingFactorRK4` splits off a diagonal linear part L (viscosity plus the
frozen dissipation -μ J_δ|∂| with μ = mean(c²)) and integrates it exactly
through the factor exp(L dt), which is the imex scheme of the solver.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..models.interface_state import GFormState, ZFormState
from ..models.solver_config import Scheme, SolverConfig
from ..muskat.model import (
    SingularStateError,
    compute_b,
    compute_c,
    compute_c_from_z,
    rhs_g,
    rhs_invzap,
    squared,
    z_reconstruction_rate,
)
from ..spectral.field import SpectralField
from ..spectral.grid import Grid
from ..spectral.operators import (
    abs_derivative,
    apply_multiplier,
    holomorphic_projection,
    laplacian,
    mollify,
)

logger = logging.getLogger(__name__)

Fields = Tuple[SpectralField, ...]
RateFunction = Callable[[Fields], Fields]

MIN_STEP_ZAP = 1e-6
MAX_AUTO_DT = 1e-2
GROWTH_FLOOR = 1e-12


class StepRejectedError(Exception):
    """Raised when a step still fails after the allowed number of dt halvings."""

    def __init__(self, message: str, dt: float):
        super().__init__(message)
        self.dt = dt


def _combine(base: Fields, scale: float, increment: Fields) -> Fields:
    return tuple(u + scale * du for u, du in zip(base, increment))


def _apply(symbols: Sequence[Optional[NDArray]], fields: Fields) -> Fields:
    return tuple(
        f if symbol is None else apply_multiplier(f, symbol, real_to_real=True)
        for f, symbol in zip(fields, symbols)
    )


def _identity(fields: Fields) -> Fields:
    return fields


class TimeStepper(ABC):
    """Shared step control: automatic dt, rejection and halving."""

    scheme: Scheme
    explicit_viscosity = True

    def __init__(self, config: SolverConfig):
        self.config = config

    # -- scheme-specific pieces -------------------------------------------------

    @abstractmethod
    def _advance(
        self,
        u: Fields,
        rate: RateFunction,
        linear: Sequence[Optional[NDArray]],
        dt: float,
        constrain: Callable[[Fields], Fields],
    ) -> Fields:
        """One step of size dt for du/dt = L u + rate(u) (L diagonal, maybe absent)."""

    @abstractmethod
    def _split(self, grid: Grid, mu: float) -> Optional[NDArray]:
        """Symbol of the linear part handled exactly, or None."""

    # -- right-hand sides ------------------------------------------------------

    def g_rate(self, mu: float) -> RateFunction:
        cfg = self.config
        viscous = cfg.epsilon if self.explicit_viscosity else 0.0

        def rate(u: Fields) -> Fields:
            (g,) = u
            nonlinear = rhs_g(GFormState(g))
            if mu:
                nonlinear = nonlinear + mu * abs_derivative(g)
            total = mollify(nonlinear, cfg.mollifier)
            if viscous:
                total = total + viscous * laplacian(g)
            return (total,)

        return rate

    def z_rate(self, mu: float) -> RateFunction:
        def rate(u: Fields) -> Fields:
            w, z_minus_id = u
            z = ZFormState.from_inv_zap(w, z_minus_id)
            w_rate = rhs_invzap(z)
            if mu:
                w_rate = w_rate + mu * abs_derivative(w)
            return (w_rate, z_reconstruction_rate(z))

        return rate

    # -- step control ------------------------------------------------------------

    def stable_dt(self, state) -> float:
        """CFL-limited step for the current state."""
        cfg = self.config
        grid = state.grid
        if isinstance(state, GFormState):
            c = compute_c(state)
        else:
            c = compute_c_from_z(state)
        c2 = squared(c).values
        b_max = compute_b(c).max_abs()
        k_max = grid.k_max
        candidates = [MAX_AUTO_DT]
        if b_max > 0.0:
            candidates.append(grid.node_spacing / b_max)
        if self.scheme is Scheme.RK4:
            candidates.append(1.0 / (float(np.max(c2)) * k_max))
            if cfg.epsilon > 0.0:
                candidates.append(1.0 / (cfg.epsilon * k_max**2))
        else:
            spread = float(np.max(np.abs(c2 - np.mean(c2))))
            if spread > 0.0:
                candidates.append(1.0 / (spread * k_max))
        return cfg.cfl_safety * min(candidates)

    def _attempt(
        self,
        u: Fields,
        dt: float,
        rate: RateFunction,
        linear: Sequence[Optional[NDArray]],
        constrain: Callable[[Fields], Fields],
        size: Callable[[Fields], float],
    ) -> Tuple[Fields, float]:
        old_size = size(u)
        limit = (1.0 + self.config.growth_limit) * old_size + GROWTH_FLOOR
        trial = dt
        reason = ""
        for halving in range(self.config.max_halvings + 1):
            try:
                new = self._advance(u, rate, linear, trial, constrain)
            except SingularStateError as e:
                reason = f"singular stage: {e}"
            else:
                if not all(f.is_finite() for f in new):
                    reason = "non-finite values"
                elif not size(new) <= limit:
                    reason = f"amplitude grew from {old_size:.3e} to {size(new):.3e}"
                else:
                    return new, trial
            logger.debug(f"Step of dt={trial:.3e} rejected ({reason}); halving {halving + 1}")
            trial *= 0.5
        raise StepRejectedError(
            f"Step rejected after {self.config.max_halvings} halvings ({reason})", dt=2.0 * trial
        )

    def step_g(self, state: GFormState, dt: Optional[float] = None) -> GFormState:
        """Advance g by dt (automatic when omitted); the returned time reflects the dt used.

        Raises:
            StepRejectedError: If the halving cascade is exhausted
        """
        dt = self.stable_dt(state) if dt is None else dt
        mu = self._dissipation_mean(compute_c(state))
        (g,), used = self._attempt(
            (state.g,),
            dt,
            self.g_rate(mu),
            [self._split(state.grid, mu)],
            _identity,
            lambda u: u[0].max_abs(),
        )
        return GFormState(g, time=state.time + used)

    def step_z(self, state: ZFormState, dt: Optional[float] = None) -> ZFormState:
        """Advance 1/Z_{,α'} and Z - α'; Z_{,α'} is refreshed as the reciprocal.

        Raises:
            SingularStateError: If min|Z_{,α'}| is below 1e-6 before the step
            StepRejectedError: If the halving cascade is exhausted
        """
        if not self.config.is_unmollified:
            raise ValueError("the z formulation requires epsilon = delta = 0")
        if state.min_abs_zap() < MIN_STEP_ZAP:
            raise SingularStateError(f"min|Z_a| = {state.min_abs_zap():.3e} below {MIN_STEP_ZAP:.0e}")
        dt = self.stable_dt(state) if dt is None else dt
        mu = self._dissipation_mean(compute_c_from_z(state))

        def constrain(u: Fields) -> Fields:
            return tuple(holomorphic_projection(f) for f in u)

        def size(u: Fields) -> float:
            w = u[0]
            if float(np.max(np.abs(w.values))) > 1.0 / MIN_STEP_ZAP:
                return float("inf")
            return (w - 1.0).max_abs()

        (w, z_minus_id), used = self._attempt(
            (state.inv_zap, state.z_minus_id),
            dt,
            self.z_rate(mu),
            [self._split(state.grid, mu), None],
            constrain,
            size,
        )
        return ZFormState.from_inv_zap(w, z_minus_id, time=state.time + used)

    def step(self, state, dt: Optional[float] = None):
        if isinstance(state, GFormState):
            return self.step_g(state, dt)
        return self.step_z(state, dt)

    def _dissipation_mean(self, c: SpectralField) -> float:
        return 0.0


class ExplicitRK4(TimeStepper):
    """Classical RK4 on εΔg + J_δ(-b∂g - c²|∂|g)."""

    scheme = Scheme.RK4

    def _split(self, grid: Grid, mu: float) -> Optional[NDArray]:
        return None

    def _advance(self, u, rate, linear, dt, constrain):
        k1 = rate(constrain(u))
        k2 = rate(constrain(_combine(u, 0.5 * dt, k1)))
        k3 = rate(constrain(_combine(u, 0.5 * dt, k2)))
        k4 = rate(constrain(_combine(u, dt, k3)))
        increment = tuple(a + 2.0 * b + 2.0 * c + d for a, b, c, d in zip(k1, k2, k3, k4))
        return constrain(_combine(u, dt / 6.0, increment))


class IntegratingFactorRK4(TimeStepper):
    """Integrating-factor RK4 with L = -εk² - μ φ̂_δ(k)|k| treated exactly.

    μ is the spatial mean of c², frozen for the step; the remainder
    J_δ(-b∂g - (c² - μ)|∂|g) is explicit.
    """

    scheme = Scheme.IMEX
    explicit_viscosity = False

    def _dissipation_mean(self, c: SpectralField) -> float:
        return float(np.mean(squared(c).values))

    def _split(self, grid: Grid, mu: float) -> Optional[NDArray]:
        k = grid.wavenumbers
        magnitude = np.abs(k)
        magnitude[grid.nyquist_index] = 0.0
        return -self.config.epsilon * k**2 - mu * self.config.mollifier.symbol(k) * magnitude

    def _advance(self, u, rate, linear, dt, constrain):
        half = [None if s is None else np.exp(0.5 * dt * s) for s in linear]
        full = [None if s is None else h * h for s, h in zip(linear, half)]
        k1 = rate(constrain(u))
        k2 = rate(constrain(_apply(half, _combine(u, 0.5 * dt, k1))))
        k3 = rate(constrain(_combine(_apply(half, u), 0.5 * dt, k2)))
        k4 = rate(constrain(_combine(_apply(full, u), dt, _apply(half, k3))))
        increment = tuple(
            a + 2.0 * b + d
            for a, b, d in zip(_apply(full, k1), _apply(half, _combine(k2, 1.0, k3)), k4)
        )
        return constrain(_combine(_apply(full, u), dt / 6.0, increment))


_SCHEMES = {Scheme.RK4: ExplicitRK4, Scheme.IMEX: IntegratingFactorRK4}


def make_stepper(config: SolverConfig) -> TimeStepper:
    return _SCHEMES[config.scheme](config)


def step_g(state: GFormState, config: SolverConfig, dt: Optional[float] = None) -> GFormState:
    """One accepted step of the g formulation (dt defaults to config.dt, then auto)."""
    return make_stepper(config).step_g(state, config.dt if dt is None else dt)


def step_z(state: ZFormState, config: SolverConfig, dt: Optional[float] = None) -> ZFormState:
    """One accepted step of the z formulation (dt defaults to config.dt, then auto)."""
    return make_stepper(config).step_z(state, config.dt if dt is None else dt)


def shift_time(state, time: float):
    """Same fields at a corrected time stamp."""
    return replace(state, time=time)
