"""Monte Carlo photon streams from a two- or three-level emitter.

Rates are per nanosecond and times inside the simulation are in ns; streams
store integer picosecond timestamps. Random numbers come from Philox
generators keyed by (seed, chunk index), so a stream depends only on its seed
and never on how chunks are scheduled.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError

log = logging.getLogger(__name__)

CHUNK_CYCLES = 1 << 20


@dataclass(frozen=True)
class Shelving:
    k_isc: float    # excited -> shelf, 1/ns
    k_reset: float  # shelf -> ground, 1/ns

    def __post_init__(self):
        if self.k_isc < 0 or self.k_reset <= 0:
            raise DomainError("shelving rates must be k_isc >= 0 and k_reset > 0")


@dataclass(frozen=True)
class EmitterModel:
    """Rate model of a single emitter.

    The pump rate at power P is ``pump_rate_at_psat * P / psat``. Setting
    ``pump_rate_at_psat`` to the total decay rate makes ``psat`` the power
    of half saturation for the two-level system.
    """

    gamma_rad: float                 # 1/ns
    gamma_nr: float = 0.0            # 1/ns
    pump_rate_at_psat: float | None = None
    psat: float = 1.0                # mW
    shelving: Shelving | None = None
    detection_efficiency: float = 1.0

    def __post_init__(self):
        if self.gamma_rad < 0 or self.gamma_nr < 0:
            raise DomainError("decay rates must be non-negative")
        if self.gamma_rad + self.gamma_nr <= 0:
            raise DomainError("total decay rate must be positive")
        if self.pump_rate_at_psat is None:
            object.__setattr__(self, "pump_rate_at_psat", self.gamma_total)
        if self.pump_rate_at_psat < 0 or self.psat <= 0:
            raise DomainError("pump rate must be non-negative and psat positive")
        if not 0 < self.detection_efficiency <= 1:
            raise DomainError("detection efficiency must lie in (0, 1]")

    @property
    def gamma_total(self):
        return self.gamma_rad + self.gamma_nr

    @property
    def lifetime(self):
        return 1.0 / self.gamma_total

    @property
    def quantum_yield(self):
        return self.gamma_rad / self.gamma_total

    def pump_rate(self, power):
        return self.pump_rate_at_psat * power / self.psat

    def detected_rate(self, power):
        """Steady-state detected photon rate (1/ns) of the rate equations."""
        r = self.pump_rate(power)
        g = self.gamma_total
        if self.shelving is None:
            rho_e = r / (r + g) if r > 0 else 0.0
        else:
            k, kr = self.shelving.k_isc, self.shelving.k_reset
            rho_e = r / (r + g + k + r * k / kr) if r > 0 else 0.0
        return self.detection_efficiency * self.gamma_rad * rho_e

    def g2(self, tau, power):
        """Analytic two-level autocorrelation 1 - exp(-(r + gamma)|tau|)."""
        r = self.pump_rate(power)
        return 1.0 - np.exp(-(r + self.gamma_total) * np.abs(tau))


@dataclass
class PhotonStream:
    timestamps: np.ndarray          # int64 picoseconds, sorted
    duration: float                 # s
    seed: int | None = None
    channels: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        if self.channels is None:
            self.channels = np.zeros(self.timestamps.size, dtype=np.int8)
        else:
            self.channels = np.asarray(self.channels, dtype=np.int8)
        if self.channels.shape != self.timestamps.shape:
            raise DomainError("channels must match timestamps")
        if self.timestamps.size and self.timestamps[-1] > self.duration * 1e12:
            raise DomainError("timestamps exceed the stream duration")
        for ch in np.unique(self.channels):
            t = self.timestamps[self.channels == ch]
            if np.any(np.diff(t) <= 0):
                raise DomainError(f"timestamps of channel {ch} are not strictly increasing")

    def __len__(self):
        return self.timestamps.size

    @property
    def rate(self):
        """Mean count rate in counts per second."""
        return self.timestamps.size / self.duration

    def channel(self, ch):
        return self.timestamps[self.channels == ch]


def _rng(seed, *key):
    ss = np.random.SeedSequence([int(seed), *key])
    return np.random.Generator(np.random.Philox(ss))


def _strictly_increasing(t):
    if t.size < 2:
        return t
    ramp = np.arange(t.size, dtype=np.int64)
    return np.maximum.accumulate(t - ramp) + ramp


def simulate_cw(model, power, duration, seed, chunk_cycles=CHUNK_CYCLES):
    """Exact stochastic simulation of the emitter under CW pumping.

    Ground-state holding times are Exp(r), excited-state holding times are
    Exp(gamma_rad + gamma_nr + k_isc); the exit channel is chosen in
    proportion to its rate, and a shelved emitter returns after Exp(k_reset).
    Only radiative decays that pass the detection efficiency are recorded.
    ``duration`` is in seconds. The emitter starts in the ground state.
    """
    if seed is None:
        raise DomainError("an explicit seed is required")
    if power < 0:
        raise DomainError("power must be non-negative")
    if duration <= 0:
        raise DomainError("duration must be positive")
    r = model.pump_rate(power)
    if r == 0:
        return PhotonStream(np.array([], dtype=np.int64), duration, seed)
    k_isc = model.shelving.k_isc if model.shelving else 0.0
    k_reset = model.shelving.k_reset if model.shelving else 1.0
    g_exit = model.gamma_total + k_isc
    p_rad = model.gamma_rad / g_exit
    p_isc = k_isc / g_exit
    t_end = duration * 1e9
    t0 = 0.0
    out = []
    chunk = 0
    while t0 < t_end:
        rng = _rng(seed, 0, chunk)
        n = chunk_cycles
        up = rng.exponential(1.0 / r, n)
        down = rng.exponential(1.0 / g_exit, n)
        u = rng.random(n)
        detect = rng.random(n) < model.detection_efficiency
        shelf = np.zeros(n)
        if k_isc > 0:
            isc = u >= 1.0 - p_isc
            shelf[isc] = rng.exponential(1.0 / k_reset, int(isc.sum()))
        emit_time = t0 + np.cumsum(up + down + shelf) - shelf
        emitted = (u < p_rad) & detect
        t0 = emit_time[-1] + shelf[-1]
        out.append(emit_time[emitted & (emit_time <= t_end)])
        chunk += 1
    t_ns = np.concatenate(out) if out else np.array([])
    ts = _strictly_increasing(np.round(t_ns * 1e3).astype(np.int64))
    ts = ts[ts <= int(duration * 1e12)]
    return PhotonStream(ts, duration, seed, metadata={"power": power, "model": "cw"})


def split_stream(stream, splitter_seed):
    """Route each photon to channel 0 or 1 with probability 1/2."""
    rng = _rng(splitter_seed, 1)
    ch = (rng.random(stream.timestamps.size) < 0.5).astype(np.int8)
    return PhotonStream(stream.timestamps, stream.duration, stream.seed, ch, dict(stream.metadata))


def poisson_stream(rate, duration, seed):
    """Homogeneous Poisson stream (rate in counts per second)."""
    rng = _rng(seed, 2)
    n = rng.poisson(rate * duration)
    ts = np.sort(rng.integers(0, int(duration * 1e12), n))
    ts = np.unique(ts)
    return PhotonStream(ts, duration, seed, metadata={"model": "poisson"})


def telegraph_stream(rate_on, rate_off, dwell, duration, seed):
    """Poisson emission switching between two intensities.

    ``dwell`` is the mean on/off dwell time in seconds (exponentially
    distributed).
    """
    rng = _rng(seed, 3)
    edges = [0.0]
    while edges[-1] < duration:
        edges.append(edges[-1] + rng.exponential(dwell))
    edges = np.minimum(np.array(edges), duration)
    parts = []
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        rate = rate_on if i % 2 == 0 else rate_off
        n = rng.poisson(rate * (b - a))
        parts.append(rng.uniform(a, b, n))
    ts = np.unique(np.round(np.concatenate(parts) * 1e12).astype(np.int64))
    return PhotonStream(ts[ts <= int(duration * 1e12)], duration, seed, metadata={"model": "telegraph"})


@dataclass
class DecayHistogram:
    time: np.ndarray      # bin centres, ns
    counts: np.ndarray
    binwidth: float       # ns
    period: float         # ns
    irf_sigma: float      # ns
    t0: float             # ns, IRF centre

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)


def simulate_pulsed(model, rep_rate, irf_sigma, duration, seed, t0=1.0, binwidth=0.008,
                    excitation_probability=1.0):
    """TCSPC decay histogram under pulsed excitation.

    ``rep_rate`` in MHz, ``irf_sigma`` in ps, ``duration`` in s, ``t0`` and
    ``binwidth`` in ns. Each pulse excites a free emitter with
    ``excitation_probability``; the emitter stays busy until it decays, so a
    decay outlasting the period blocks the following pulses. Detected delays
    receive Gaussian jitter and are folded into one period.
    """
    if rep_rate <= 0 or duration <= 0 or irf_sigma < 0:
        raise DomainError("rep_rate and duration must be positive, irf_sigma non-negative")
    period = 1e3 / rep_rate
    if period < 5 * model.lifetime:
        warnings.warn(f"repetition period {period:.2f} ns is below five lifetimes", stacklevel=2)
    n_pulses = int(round(duration * rep_rate * 1e6))
    k_isc = model.shelving.k_isc if model.shelving else 0.0
    g_exit = model.gamma_total + k_isc
    sigma = irf_sigma * 1e-3
    hist = np.zeros(int(round(period / binwidth)), dtype=np.int64)
    edges = np.arange(hist.size + 1) * binwidth
    chunk_size = CHUNK_CYCLES
    busy_until = -np.inf
    for chunk, start in enumerate(range(0, n_pulses, chunk_size)):
        rng = _rng(seed, 4, chunk)
        n = min(chunk_size, n_pulses - start)
        pulse_t = (start + np.arange(n)) * period
        excited = rng.random(n) < excitation_probability
        delay = rng.exponential(1.0 / g_exit, n)
        u = rng.random(n)
        detect = rng.random(n) < model.detection_efficiency
        jitter = rng.normal(0.0, sigma, n) if sigma > 0 else np.zeros(n)
        busy = np.zeros(n)
        if k_isc > 0:
            isc = u >= 1.0 - k_isc / g_exit
            busy[isc] = rng.exponential(1.0 / model.shelving.k_reset, int(isc.sum()))
        busy += delay
        free = excited & (pulse_t >= busy_until)
        # long decays block later pulses; walk only those rare cases
        long_idx = np.nonzero(excited & (busy > period))[0]
        if long_idx.size or busy_until > pulse_t[0]:
            free = excited.copy()
            blocked_until = busy_until
            stop = 0
            for i in np.r_[long_idx, n].astype(int):
                seg = slice(stop, i)
                free[seg] &= pulse_t[seg] >= blocked_until
                if i == n:
                    break
                if pulse_t[i] >= blocked_until:
                    blocked_until = pulse_t[i] + busy[i]
                else:
                    free[i] = False
                stop = i + 1
            busy_until = blocked_until
        emitted = free & (u < model.gamma_rad / g_exit) & detect
        t = np.mod(t0 + delay[emitted] + jitter[emitted], period)
        hist += np.histogram(t, edges)[0]
    centres = 0.5 * (edges[1:] + edges[:-1])
    return DecayHistogram(centres, hist, binwidth, period, sigma, t0)
