"""Worst-case synchronized-burst experiment.

N TCP sources each write one segment every ``t`` seconds, source i starting
at ``(i - 1) * g``, for ``build_segments`` periods.  At ``build_segments * t``
every source writes a full congestion window at once.  The result of a run is
the peak queue at the switch-1 port feeding the bottleneck link.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
import itertools
import logging

import numpy as np

from . import _kernel as K
from . import abr, atm, erica as _erica, tcp
from .engine import PS_PER_S, PS_PER_US

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    """A run broke one of its own invariants (loss, reordering, ledger)."""


@dataclass(frozen=True)
class ScenarioConfig:
    n_sources: int
    mss: int = 512
    t: float = 1e-3
    g: float = 50e-6
    d: float = 1000.0
    cwnd_max: int = 65536
    build_segments: int = 1000
    duration: float | None = None
    erica: _erica.EricaParams = field(default_factory=_erica.EricaParams)
    payload_rate: float = atm.OC3_PAYLOAD_RATE
    nrm: int = 32
    rcvwnd: int | None = None
    burst: bool = True
    ledger_every: int = 1
    seed: int | None = None  # reserved; the model has no randomness

    def __post_init__(self):
        if self.n_sources < 1:
            raise ValueError("n_sources must be at least 1")
        if self.mss < 1 or self.cwnd_max < self.mss:
            raise ValueError("need 1 <= mss <= cwnd_max")
        if self.t <= 0 or self.g < 0 or self.d < 0:
            raise ValueError("t must be positive, g and d non-negative")
        if self.build_segments < 0 or self.nrm < 2:
            raise ValueError("build_segments must be >= 0 and nrm >= 2")
        if self.payload_rate <= 0:
            raise ValueError("payload_rate must be positive")
        if self.burst and self.burst_time > self.run_duration:
            raise ValueError("burst falls outside the simulated duration")

    @property
    def link(self):
        return atm.LinkParams(payload_rate=self.payload_rate, length_km=self.d)

    @property
    def burst_time(self):
        return self.build_segments * self.t

    @property
    def rtt(self):
        """Round-trip propagation over the three hops each way."""
        return 6 * self.d * atm.PER_KM_DELAY_PS / PS_PER_S

    @property
    def run_duration(self):
        if self.duration is not None:
            return self.duration
        return self.burst_time + 5 * self.rtt

    @property
    def receive_window(self):
        return self.cwnd_max if self.rcvwnd is None else self.rcvwnd

    def label(self):
        return f"{self.mss}/{_fmt(self.g * 1e6)}/{_fmt(self.t * 1e3)}/{_fmt(self.d)}"


def _fmt(x):
    return f"{x:.0f}" if abs(x - round(x)) < 1e-9 else f"{x:g}"


@dataclass
class RunResult:
    config: ScenarioConfig
    q_max: int
    q_max_time: int  # ps
    trace: np.ndarray  # rows of (time_ps, queue_cells)
    acr_trace: np.ndarray  # one row of per-source ACR per averaging interval
    final_cwnd: np.ndarray
    retransmits: int
    ledger: np.ndarray  # per VC: fwd sent/delivered/in flight, rev sent/delivered/in flight
    ledger_checks: int
    ledger_failures: int
    events: int
    segments_delivered: np.ndarray

    @property
    def q_max_time_s(self):
        return self.q_max_time / PS_PER_S

    def ledger_balanced(self):
        L = self.ledger
        return self.ledger_failures == 0 and bool(
            np.all(L[:, 0] == L[:, 1] + L[:, 2]) and np.all(L[:, 3] == L[:, 4] + L[:, 5])
        )


@dataclass
class Simulation:
    """Arrays of one built topology, ready for the kernel."""

    config: ScenarioConfig
    cfg: np.ndarray
    erica_params: np.ndarray
    tcp_int: np.ndarray
    tcp_flt: np.ndarray
    rcv_nxt: np.ndarray
    src_int: np.ndarray
    src_flt: np.ndarray
    src_segs: np.ndarray
    dst: np.ndarray
    ports: np.ndarray
    erica_int: np.ndarray
    erica_flt: np.ndarray
    last_seen: np.ndarray
    ccr_table: np.ndarray

    def app_schedule(self, vc):
        """Application write times (ps) and sizes for 0-based source ``vc``."""
        c = self.cfg
        times = [vc * c[K.C_G] + j * c[K.C_T] for j in range(c[K.C_BUILD])]
        sizes = [self.config.mss] * len(times)
        if c[K.C_BURST]:
            times.append(int(c[K.C_BURST_AT]))
            sizes.append(self.config.cwnd_max)
        return times, sizes

    def run(self):
        stats, trace, acr, counters = K.simulate(
            self.cfg, self.erica_params, self.tcp_int, self.tcp_flt, self.rcv_nxt,
            self.src_int, self.src_flt, self.src_segs, self.dst, self.ports,
            self.erica_int, self.erica_flt, self.last_seen, self.ccr_table,
        )
        err = int(stats[K.S_ERROR])
        if err != K.E_NONE:
            raise SimulationError(
                f"{K.ERROR_TEXT[err]} (vc {int(stats[K.S_ERROR_VC])}, "
                f"t = {stats[K.S_ERROR_TIME] / PS_PER_US:.3f} us, config {self.config.label()} "
                f"N={self.config.n_sources})"
            )
        p = self.ports[K.BOTTLENECK]
        return RunResult(
            config=self.config,
            q_max=int(p[atm.P_QMAX]),
            q_max_time=int(p[atm.P_QMAX_TIME]),
            trace=trace,
            acr_trace=acr,
            final_cwnd=self.tcp_flt[:, tcp.CWND].copy(),
            retransmits=int(self.tcp_int[:, tcp.RETX].sum()),
            ledger=counters,
            ledger_checks=int(stats[K.S_LEDGER_CHECKS]),
            ledger_failures=int(stats[K.S_LEDGER_FAILS]),
            events=int(stats[K.S_EVENTS]),
            segments_delivered=self.dst[:, abr.DELIVERED].copy(),
        )


def _ps(seconds):
    return int(round(seconds * PS_PER_S))


def build(config):
    n = config.n_sources
    link = config.link
    cfg = np.zeros(K.C_SIZE, dtype=np.int64)
    cfg[K.C_N] = n
    cfg[K.C_MSS] = config.mss
    cfg[K.C_T] = _ps(config.t)
    cfg[K.C_G] = _ps(config.g)
    cfg[K.C_BUILD] = config.build_segments
    cfg[K.C_CWND_MAX] = config.cwnd_max
    cfg[K.C_DURATION] = _ps(config.run_duration)
    cfg[K.C_BURST_AT] = _ps(config.burst_time)
    cfg[K.C_INTERVAL] = _ps(config.erica.interval)
    cfg[K.C_LEDGER_EVERY] = config.ledger_every
    cfg[K.C_BURST] = int(config.burst)

    ti, tf = tcp.new_conns(n, mss=config.mss, cwnd_max=config.cwnd_max, rcvwnd=config.receive_window)
    rcv = tcp.new_receivers(n)
    # every in-flight segment of a full window plus slack for sub-MSS tails
    ring = 2 * (config.receive_window // config.mss) + 8
    ai, af, segs = abr.new_sources(n, pcr=link.cell_rate, nrm=config.nrm, ring=ring)
    dst = abr.new_dests(n)

    ports = atm.new_ports(K.port_count(n))
    for p in range(ports.shape[0]):
        atm.init_port(ports, p, link)

    erica_ports = np.array([K.BOTTLENECK] + [K.sw2_port(n, vc) for vc in range(n)], dtype=np.int64)
    ei, ef, last_seen, ccr = _erica.new_ports(len(erica_ports), n, link.cell_rate, erica_ports)
    return Simulation(config, cfg, config.erica.as_array(), ti, tf, rcv, ai, af, segs, dst, ports, ei, ef, last_seen, ccr)


def run(config):
    return build(config).run()


SWEEP_MSS = (512, 1024)
SWEEP_G = (50e-6, 100e-6)
SWEEP_T = (1e-3, 10e-3)
SWEEP_D = (1000.0, 2000.0)


def factorial(mss=SWEEP_MSS, g=SWEEP_G, t=SWEEP_T, d=SWEEP_D):
    """Factor combinations in table order: mss slowest, distance fastest."""
    return list(itertools.product(mss, g, t, d))


def sweep(sources, base=None, mss=SWEEP_MSS, g=SWEEP_G, t=SWEEP_T, d=SWEEP_D, jobs=1):
    """Run every factor combination for each source count.

    Returns one ``(line, config_label, {n: RunResult})`` tuple per combination.
    """
    base = base or ScenarioConfig(n_sources=1)
    combos = factorial(mss, g, t, d)
    configs = [
        replace(base, n_sources=n, mss=m, g=gg, t=tt, d=dd)
        for (m, gg, tt, dd) in combos
        for n in sources
    ]

    def one(cfg):
        try:
            return run(cfg)
        except Exception as exc:
            raise SimulationError(f"sweep run {cfg.label()} N={cfg.n_sources} failed: {exc}") from exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, configs))
    else:
        results = [one(c) for c in configs]

    rows = []
    it = iter(results)
    for line, combo in enumerate(combos, start=1):
        per_n = {n: next(it) for n in sources}
        rows.append((line, configs[(line - 1) * len(sources)].label(), per_n))
    return rows


def config_echo(config):
    d = asdict(config)
    d["erica"] = asdict(config.erica)
    return d
