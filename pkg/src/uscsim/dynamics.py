"""Dressed-basis Lindblad dynamics under flux modulation.

The master equation is expressed in the instantaneous eigenbasis of the
time-dependent Hamiltonian.  Decay channels connect dressed states downward
in energy with rates given by squared matrix elements of the bare qubit and
mode quadratures; dephasing of the transmon produces both dressed-state
jumps and pure dephasing of dressed coherences:

    Gamma_gamma^{jk} = gamma   |<j| b + b^dag |k>|^2      (E_j < E_k)
    Gamma_kappa^{jk} = kappa   |<j| a + a^dag |k>|^2      (E_j < E_k)
    Gamma_phi^{jk}   = gamma_phi/2 |<j| b^dag b |k>|^2    (j != k)
    Phi^j            = sqrt(gamma_phi/2) |<j| b^dag b |j>|^2

The dissipator acts elementwise on the density matrix written in the dressed
basis; the frame is rebuilt at every accepted integrator step.  Because the
dissipative rates are many orders of magnitude below the coherent
frequencies, the dissipator is evaluated once per step at the current state
and carried as a constant through the Runge-Kutta stages; the induced error
is O(h^2 kappa omega), far below the integration tolerance.

Integration uses an adaptive Dormand-Prince 5(4) pair operating directly on
the density matrix.  When the flux drive is inactive the Hamiltonian is
static and the dressed-frame equation decouples into an exact elementwise
solution (population rate equation plus damped coherence phases), which is
used instead of step-by-step integration.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from .constants import GHZ
from .hamiltonian import FluxGridCache, HilbertConfig, destroy, _embed
from .modes import SystemParams


class IntegratorError(RuntimeError):
    """Adaptive integration failed (step underflow or trace drift)."""


# ---------------------------------------------------------------------------
# drive and configuration containers


@dataclass(frozen=True)
class QuenchRamp:
    """Linear flux ramp appended to the modulation.

    At ``start`` the modulated flux is frozen and ramped linearly to
    ``hold_flux`` over ``ramp_time``, then held.
    """

    start: float                 # [s]
    ramp_time: float             # [s]
    hold_flux: float = 0.5       # [Phi_0]

    @property
    def time_safe(self) -> float:
        """Ramp duration, floored to keep zero-length ramps well defined."""
        return max(self.ramp_time, 1e-15)


@dataclass(frozen=True)
class FluxDrive:
    """Sinusoidal external flux, Phi(t) = offset + amplitude cos(w t)."""

    amplitude: float             # [Phi_0]
    frequency: float             # [rad/s]
    offset: float = 0.0          # [Phi_0]
    post_protocol: Optional[QuenchRamp] = None

    def flux(self, t: float) -> float:
        base = self.offset + self.amplitude * math.cos(self.frequency * t)
        ramp = self.post_protocol
        if ramp is None or t < ramp.start:
            return base
        start_flux = self.offset + self.amplitude * math.cos(
            self.frequency * ramp.start)
        if t >= ramp.start + ramp.time_safe:
            return ramp.hold_flux
        frac = (t - ramp.start) / ramp.time_safe
        return start_flux + frac * (ramp.hold_flux - start_flux)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.frequency if self.frequency > 0 else math.inf



@dataclass(frozen=True)
class DissipationRates:
    """Bare decay and dephasing rates [rad/s]."""

    kappa: float
    gamma: float
    gamma_phi: float
    dephasing_power: int = 2   # exponent of |<j|b^dag b|j>| in Phi^j

    def __post_init__(self):
        if min(self.kappa, self.gamma, self.gamma_phi) < 0:
            raise ValueError("rates must be non-negative")
        if self.dephasing_power not in (1, 2):
            raise ValueError("dephasing_power must be 1 or 2")


@dataclass(frozen=True)
class SolverConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: Optional[float] = None    # default: drive period / 50
    sample_dt: Optional[float] = None   # default: t_end / 1000
    track_levels: int = 6               # dressed populations recorded


@dataclass
class DressedFrame:
    """Instantaneous eigenframe with precomputed dissipation data."""

    energies: np.ndarray
    states: np.ndarray        # columns
    gain: np.ndarray          # gain[j, k]: rate of k -> j transfer
    loss: np.ndarray          # loss[k] = sum_j gain[j, k]
    decay_matrix: np.ndarray  # coherence decay (loss + pure dephasing)


@dataclass
class SimResult:
    """Sampled trajectory of a master-equation run."""

    times: np.ndarray
    photons: np.ndarray             # (n_samples,) mode-0 photon number
    qubit_excitation: np.ndarray
    flux: np.ndarray
    populations: np.ndarray         # (n_samples, track_levels) dressed
    trace: np.ndarray
    final_state: np.ndarray
    meta: dict = field(default_factory=dict)

    def avg_photons(self, window_frac: float = 1.0) -> float:
        """Time-averaged photon number over the trailing window."""
        t, n = self.times, self.photons
        t0 = t[-1] - window_frac * (t[-1] - t[0])
        sel = t >= t0
        if sel.sum() < 2:
            return float(n[-1])
        return float(np.trapezoid(n[sel], t[sel]) / (t[sel][-1] - t[sel][0]))

    def max_photons(self) -> float:
        return float(self.photons.max())

    def to_csv(self, path: str) -> None:
        ntrack = self.populations.shape[1]
        header = (["t_ns", "flux_phi0", "n_photons", "qubit_excitation"]
                  + [f"pop_{j}" for j in range(ntrack)] + ["trace"])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for i in range(self.times.size):
                row = [self.times[i] * 1e9, self.flux[i], self.photons[i],
                       self.qubit_excitation[i]]
                row += list(self.populations[i])
                row.append(self.trace[i])
                writer.writerow([f"{x:.12g}" for x in row])


@dataclass
class SweepResult:
    drive_freqs: np.ndarray
    avg_photons: np.ndarray
    max_photons: np.ndarray

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["drive_freq_GHz", "avg_photons", "max_photons"])
            for f, avg, mx in zip(self.drive_freqs, self.avg_photons,
                                  self.max_photons):
                writer.writerow([f"{f / GHZ:.12g}", f"{avg:.12g}",
                                 f"{mx:.12g}"])


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) tableau

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_ERR = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                    -17253 / 339200, 22 / 525, -1 / 40])


class DynamicsEngine:
    """Couples the flux-grid Hamiltonian cache with the dressed dissipator.

    The engine owns the truncated operator set and is the entry point for
    :meth:`evolve`, :meth:`frequency_sweep` and :meth:`quench_and_decay`.
    """

    def __init__(self, params: SystemParams,
                 cfg: Optional[HilbertConfig] = None,
                 rates: Optional[DissipationRates] = None,
                 solver: Optional[SolverConfig] = None,
                 grid_points: int = 401):
        self.cfg = cfg or HilbertConfig()
        self.params = params
        self.rates = rates or DissipationRates(0.0, 0.0, 0.0)
        self.solver = solver or SolverConfig()
        self.cache = FluxGridCache(params, self.cfg, n_points=grid_points)

        b = _embed(self.cfg, 0, destroy(self.cfg.qubit_levels))
        a = _embed(self.cfg, 1, destroy(self.cfg.fock_dim))
        self.qubit_x = b + b.conj().T
        self.qubit_num = b.conj().T @ b
        self.mode_x = a + a.conj().T
        self.photon_num = a.conj().T @ a
        self._build_fast_hamiltonian()

    def _build_fast_hamiltonian(self):
        """Precompute the Hamiltonian as a fixed part plus a linear
        combination of basis operators with flux-dependent coefficients.

        H(Phi) = H_modes + sum_q E_q(Phi) P_q
                         + sum_{i<=j} n_ij(Phi) Q_ij,

        where P_q projects on transmon level q and Q_ij carries the charge
        coupling to the mode quadratures.  Evaluating the cubic splines
        directly on their coefficient arrays keeps a single Hamiltonian
        build at ~10 microseconds, which dominates the integrator inner
        loop otherwise.
        """
        cfg, cache = self.cfg, self.cache
        lv, d = cfg.qubit_levels, cfg.dim
        zero_en = np.zeros(lv)
        zero_ch = np.zeros((lv, lv))
        from .hamiltonian import _assemble
        self._h_fixed = _assemble(cfg, self.params, zero_en, zero_ch,
                                  cache.coupling_scale)
        quad = sum(cache.coupling_scale[k]
                   * 1j * (al.conj().T - al)
                   for k, al in zip(cfg.include_modes, [
                       _embed(cfg, 1 + i, destroy(cfg.fock_dim))
                       for i in range(len(cfg.include_modes))]))
        basis = []
        self._pairs = []
        for q in range(lv):
            proj = np.zeros((lv, lv))
            proj[q, q] = 1.0
            basis.append(_embed(cfg, 0, proj).astype(complex))
        for i in range(lv):
            for j in range(i, lv):
                sym = np.zeros((lv, lv))
                sym[i, j] = 1.0
                sym[j, i] = 1.0
                basis.append(_embed(cfg, 0, sym) @ quad)
                self._pairs.append((i, j))
        self._h_basis = np.stack([m.ravel() for m in basis])
        # raw cubic-spline coefficient tables on the uniform flux grid
        es, cs = cache._energy_spline, cache._charge_spline
        self._sp_x = es.x
        self._sp_dx = es.x[1] - es.x[0]
        idx = [(i, j) for i in range(lv) for j in range(i, lv)]
        self._sp_c = np.concatenate(
            [es.c.reshape(4, -1, lv)] +
            [cs.c[:, :, i, j][:, :, None] for (i, j) in idx], axis=2)

    def _coeffs(self, flux: float) -> np.ndarray:
        x = self.cache.fold(flux)
        i = min(int(x / self._sp_dx), self._sp_x.size - 2)
        t = x - self._sp_x[i]
        c = self._sp_c[:, i, :]
        return ((c[0] * t + c[1]) * t + c[2]) * t + c[3]

    def hamiltonian(self, flux: float) -> np.ndarray:
        """Fast-path Hamiltonian, identical to the cache assembly."""
        d = self.cfg.dim
        return self._h_fixed + (self._coeffs(flux)
                                @ self._h_basis).reshape(d, d)

    # -- frames ------------------------------------------------------------

    def build_frame(self, h: np.ndarray,
                    prev: Optional[DressedFrame] = None) -> DressedFrame:
        energies, states = sla.eigh(h)
        if prev is not None:
            # keep the eigenvector phase gauge continuous between frames
            overlap = np.einsum("ij,ij->j", prev.states.conj(), states)
            mag = np.abs(overlap)
            phase = np.where(mag > 1e-12, overlap / np.where(mag > 0, mag, 1),
                             1.0)
            states = states * phase.conj()
        r = self.rates
        v = states
        xq = np.abs(v.conj().T @ self.qubit_x @ v) ** 2
        xm = np.abs(v.conj().T @ self.mode_x @ v) ** 2
        nq = np.abs(v.conj().T @ self.qubit_num @ v) ** 2
        down = energies[:, None] < energies[None, :] - 1e-9 * abs(
            energies[-1] - energies[0])
        # all jump channels act downward in dressed energy; upward dephasing
        # jumps would heat the ground state, which must remain the
        # equilibrium of the master equation
        gain = (r.gamma * xq + r.kappa * xm + r.gamma_phi / 2.0 * nq) * down
        loss = gain.sum(axis=0)
        phi = np.sqrt(r.gamma_phi / 2.0) * np.sqrt(np.diag(nq)) \
            ** r.dephasing_power
        decay = 0.5 * (loss[:, None] + loss[None, :]) \
            + 0.5 * (phi[:, None] - phi[None, :]) ** 2
        return DressedFrame(energies=energies, states=states, gain=gain,
                            loss=loss, decay_matrix=decay)

    def dressed_state(self, flux: float, index: int = 0) -> np.ndarray:
        """Density matrix of a single dressed eigenstate at fixed flux."""
        frame = self.build_frame(self.hamiltonian(flux))
        v = frame.states[:, index]
        return np.outer(v, v.conj())

    def _dissipator(self, rho: np.ndarray, frame: DressedFrame) -> np.ndarray:
        v = frame.states
        sigma = v.conj().T @ rho @ v
        out = -frame.decay_matrix * sigma
        np.fill_diagonal(out, np.diag(out) + frame.gain @ np.real(
            np.diag(sigma)))
        return v @ out @ v.conj().T

    # -- main loop ---------------------------------------------------------

    def evolve(self, drive: FluxDrive, t_end: float,
               initial: Optional[np.ndarray] = None,
               solver: Optional[SolverConfig] = None) -> SimResult:
        """Integrate the dressed master equation from t=0 to ``t_end``.

        ``initial`` is a density matrix; by default the dressed ground state
        at the initial flux.  Raises :class:`IntegratorError` on step-size
        underflow or when the trace drifts by more than 1e-5.
        """
        sol = solver or self.solver
        if drive.amplitude == 0.0 and drive.post_protocol is None:
            return self._evolve_static(drive.flux(0.0), t_end, initial, sol)

        max_step = sol.max_step or drive.period / 50.0
        sample_dt = sol.sample_dt or t_end / 1000.0
        h_of = self.hamiltonian

        rho = self._initial(initial, drive.flux(0.0))
        frame = self.build_frame(h_of(drive.flux(0.0)))
        rec = _Recorder(self, sol.track_levels)
        rec.take(0.0, rho, frame, drive.flux(0.0))

        t = 0.0
        h = min(max_step, 1e-13)
        next_sample = sample_dt
        k1 = self._coherent(h_of(drive.flux(t)), rho)
        diss = self._dissipator(rho, frame)
        while t < t_end:
            h = min(h, t_end - t, max_step)
            ks = [k1 + diss]
            for i in range(1, 7):
                y = rho
                for a_ij, k in zip(_DP_A[i], ks):
                    y = y + (h * a_ij) * k
                ti = t + _DP_C[i] * h
                if i < 6:
                    ks.append(self._coherent(h_of(drive.flux(ti)), y) + diss)
                else:
                    rho_new = y
                    k7 = self._coherent(h_of(drive.flux(ti)), y) + diss
                    ks.append(k7)
            err = h * sum(e * k for e, k in zip(_DP_ERR, ks) if e != 0.0)
            scale = sol.atol + sol.rtol * np.maximum(np.abs(rho),
                                                     np.abs(rho_new))
            errnorm = np.sqrt(np.mean(np.abs(err / scale) ** 2))
            if errnorm <= 1.0:
                t += h
                rho = 0.5 * (rho_new + rho_new.conj().T)
                frame = self.build_frame(h_of(drive.flux(t)), prev=frame)
                diss = self._dissipator(rho, frame)
                k1 = self._coherent(h_of(drive.flux(t)), rho)
                tr = float(np.real(np.trace(rho)))
                if abs(tr - 1.0) > 1e-5:
                    raise IntegratorError(
                        f"trace drifted to {tr:.8f} at t={t:.3e} s "
                        f"(step {h:.3e} s)")
                if t >= next_sample or t >= t_end:
                    rec.take(t, rho, frame, drive.flux(t))
                    next_sample += sample_dt
            factor = 0.9 * errnorm ** -0.2 if errnorm > 0 else 5.0
            h *= min(5.0, max(0.2, factor))
            if h < 1e-18:
                raise IntegratorError(
                    f"step size underflow at t={t:.3e} s")
        return rec.result(rho, meta={"drive_frequency": drive.frequency,
                                     "amplitude": drive.amplitude})

    @staticmethod
    def _coherent(h_mat: np.ndarray, rho: np.ndarray) -> np.ndarray:
        hr = h_mat @ rho
        return -1j * (hr - hr.conj().T)

    def _initial(self, initial, flux: float) -> np.ndarray:
        if initial is None:
            return self.dressed_state(flux, 0)
        rho = np.asarray(initial, dtype=complex)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        if abs(np.trace(rho) - 1.0) > 1e-9:
            raise ValueError("initial state must have unit trace")
        return rho

    # -- static-frame exact path ------------------------------------------

    def _evolve_static(self, flux: float, t_end: float, initial,
                       sol: SolverConfig, n_samples: int = 400,
                       meta: Optional[dict] = None,
                       t_offset: float = 0.0) -> SimResult:
        """Exact solution for a time-independent Hamiltonian.

        In the dressed basis the equation splits into a classical rate
        equation for the populations and independently damped, freely
        rotating coherences.  Coherence phases are undersampled on the
        output grid but do not feed back on any population.
        """
        rho = self._initial(initial, flux)
        frame = self.build_frame(self.hamiltonian(flux))
        v = frame.states
        sigma = v.conj().T @ rho @ v
        times = np.linspace(0.0, t_end, n_samples)
        dt = times[1] - times[0]
        a_rate = frame.gain - np.diag(frame.loss)
        prop = sla.expm(a_rate * dt)
        de = frame.energies[:, None] - frame.energies[None, :]
        step_phase = np.exp((-1j * de - frame.decay_matrix) * dt)

        rec = _Recorder(self, sol.track_levels)
        pops = np.real(np.diag(sigma)).copy()
        coh = sigma - np.diag(np.diag(sigma))
        for i, t in enumerate(times):
            sig = coh + np.diag(pops)
            rho_t = v @ sig @ v.conj().T
            rec.take(t_offset + t, rho_t, frame, flux)
            if i < n_samples - 1:
                pops = prop @ pops
                coh = coh * step_phase
        final = v @ (coh + np.diag(pops)) @ v.conj().T
        return rec.result(final, meta=meta or {"static_flux": flux})

    # -- protocols ---------------------------------------------------------

    def frequency_sweep(self, drive_freqs: Sequence[float], amplitude: float,
                        t_end: float, jobs: int = 1,
                        window_frac: float = 1.0) -> SweepResult:
        """Time-averaged photon number for each drive frequency [rad/s]."""
        freqs = list(drive_freqs)
        args = [(self, f, amplitude, t_end, window_frac) for f in freqs]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(_sweep_cell, args))
        else:
            rows = [_sweep_cell(a) for a in args]
        avg, mx = zip(*rows)
        return SweepResult(drive_freqs=np.asarray(freqs),
                           avg_photons=np.asarray(avg),
                           max_photons=np.asarray(mx))

    def quench_and_decay(self, drive: FluxDrive, tau: float,
                         ramp_time: Optional[float] = None,
                         hold_flux: float = 0.5,
                         decay_time: Optional[float] = None,
                         solver: Optional[SolverConfig] = None) -> SimResult:
        """Modulate for ``tau``, ramp the flux to ``hold_flux``, then decay.

        The modulation and ramp are integrated with the adaptive stepper;
        the subsequent evolution at fixed flux uses the exact static-frame
        solution, under which the photon number of the decoupled mode decays
        exponentially at kappa.
        """
        sol = solver or self.solver
        ramp_time = drive.period if ramp_time is None else ramp_time
        if decay_time is None:
            decay_time = 5.0 / max(self.rates.kappa, 1.0)
        ramped = replace(drive, post_protocol=QuenchRamp(
            start=tau, ramp_time=ramp_time, hold_flux=hold_flux))
        t_active = tau + ramp_time
        if tau == 0.0 and ramp_time == 0.0:
            pre = None
            rho = self._initial(None, drive.flux(0.0))
        else:
            pre = self.evolve(ramped, t_active, solver=sol)
            rho = pre.final_state
        post = self._evolve_static(hold_flux, decay_time, rho, sol,
                                   meta={"protocol": "quench",
                                         "tau": tau},
                                   t_offset=t_active)
        if pre is None:
            return post
        return _concat(pre, post)


def _sweep_cell(arg) -> Tuple[float, float]:
    engine, freq, amplitude, t_end, window_frac = arg
    res = engine.evolve(FluxDrive(amplitude=amplitude, frequency=freq),
                        t_end)
    return res.avg_photons(window_frac), res.max_photons()


def _concat(a: SimResult, b: SimResult) -> SimResult:
    meta = dict(a.meta)
    meta.update(b.meta)
    meta["post_ramp_start"] = b.times[0]
    return SimResult(
        times=np.concatenate([a.times, b.times]),
        photons=np.concatenate([a.photons, b.photons]),
        qubit_excitation=np.concatenate([a.qubit_excitation,
                                         b.qubit_excitation]),
        flux=np.concatenate([a.flux, b.flux]),
        populations=np.vstack([a.populations, b.populations]),
        trace=np.concatenate([a.trace, b.trace]),
        final_state=b.final_state, meta=meta)


class _Recorder:
    def __init__(self, engine: DynamicsEngine, track_levels: int):
        self.engine = engine
        self.track = track_levels
        self.rows = []

    def take(self, t: float, rho: np.ndarray, frame: DressedFrame,
             flux: float):
        eng = self.engine
        photons = float(np.real(np.trace(eng.photon_num @ rho)))
        qexc = float(np.real(np.trace(eng.qubit_num @ rho)))
        v = frame.states[:, :self.track]
        pops = np.real(np.einsum("ij,jk,ki->i", v.conj().T, rho, v))
        self.rows.append((t, photons, qexc, flux,
                          float(np.real(np.trace(rho))), pops))

    def result(self, final_state: np.ndarray, meta: dict) -> SimResult:
        t, ph, qe, fl, tr, pops = zip(*self.rows)
        return SimResult(times=np.asarray(t), photons=np.asarray(ph),
                         qubit_excitation=np.asarray(qe),
                         flux=np.asarray(fl),
                         populations=np.vstack(pops),
                         trace=np.asarray(tr),
                         final_state=final_state, meta=meta)
