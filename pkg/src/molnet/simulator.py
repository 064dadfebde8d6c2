"""Monte Carlo simulation of the clustered network around the reference receiver.

Each trial draws cluster centres in the box ``[-h, h]^3``, one transmitter
per cluster per slot (Gaussian scatter, kept outside receiver balls), the
reference cluster's earlier transmitters and the reference transmitter at
distance ``y0_norm``, then a Poisson molecule count.

Trials are generated in fixed-size chunks, each with its own child of a
``numpy.random.SeedSequence``; results therefore do not depend on how many
workers process the chunks.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from molnet import kernels
from molnet.channel import p_LL
from molnet.detector import DetectorThresholds, compute_thresholds, decide
from molnet.interference import interference_stats
from molnet.params import SystemParams

log = logging.getLogger(__name__)

MODES = ("analysis_matched", "full_exclusion")
MAX_REJECTION_ROUNDS = 10_000
_WARNED = set()


@dataclass(frozen=True)
class TrialConfig:
    params: SystemParams
    trials: int = 50_000
    box_half_width: float | None = None     # default 25 r0
    exclusion_mode: str = "analysis_matched"
    seed: int = 20230501
    chunk_size: int = 1000
    workers: int = 1
    lt_s: tuple = (0.5, 1.0)
    reference_symbol: int | None = None     # pin the reference symbol (index)
    backend: str | None = None              # kernel backend override

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.exclusion_mode not in MODES:
            raise ValueError(f"exclusion_mode must be one of {MODES}")
        if self.chunk_size < 1 or self.workers < 1:
            raise ValueError("chunk_size and workers must be >= 1")
        if self.box_half_width is None:
            object.__setattr__(self, "box_half_width", 25.0 * self.params.r0)
        reach = 10.0 * self.params.sigma + 3.0 * self.params.r0
        if self.box_half_width < reach and reach not in _WARNED:
            _WARNED.add(reach)
            log.warning("box half-width %.1f um < %.1f um: far interference is truncated",
                        self.box_half_width, reach)

    @property
    def volume(self) -> float:
        return (2.0 * self.box_half_width) ** 3


@dataclass
class NetworkRealization:
    """One trial. Slot ``i`` (1-based) of a cluster is column ``i - 1``."""

    parents: np.ndarray                 # (P, 3)
    transmitters: np.ndarray            # (P, L, 3)
    transmitter_symbols: np.ndarray     # (P, L) constellation indices
    intra_positions: np.ndarray         # (L-1, 3)
    intra_symbols: np.ndarray           # (L-1,)
    reference_position: np.ndarray      # (3,)
    reference_symbol: int


@dataclass
class SimResult:
    trials: int
    error_rate: float
    stderr: float
    mean_intra: float
    mean_inter: float
    stderr_intra: float
    stderr_inter: float
    lt_estimates: dict = field(default_factory=dict)    # s -> (mean, stderr)
    per_symbol_error: list = field(default_factory=list)
    thresholds: DetectorThresholds | None = None

    @property
    def mean_interference(self) -> float:
        return self.mean_intra + self.mean_inter


# ---------------------------------------------------------------------------
# vectorised sampling over a chunk of trials

def _offset(trial, config):
    # trials are laid out side by side along the first axis so one k-d tree
    # serves the whole chunk without cross-trial neighbours
    pitch = 4.0 * config.box_half_width + 10.0 * config.params.r0
    return np.asarray(trial, dtype=float) * pitch


def _draw_counts(config, rng, n):
    mean = config.params.lambda_p * config.volume
    return rng.poisson(mean, size=n) if mean > 0 else np.zeros(n, dtype=np.int64)


def _place_parents(config, rng, counts):
    h = config.box_half_width
    r0 = config.params.r0
    trial = np.repeat(np.arange(counts.size), counts)
    pos = rng.uniform(-h, h, size=(trial.size, 3))
    if config.exclusion_mode == "analysis_matched":
        keep = np.einsum("ij,ij->i", pos, pos) >= (2.0 * r0) ** 2
        return pos[keep], trial[keep]
    # hard-core thinning: a centre within 2 r0 of the origin or of an
    # earlier centre of the same trial is redrawn until none remain
    for _ in range(MAX_REJECTION_ROUNDS):
        bad = np.einsum("ij,ij->i", pos, pos) < (2.0 * r0) ** 2
        if pos.shape[0] > 1:
            shifted = pos.copy()
            shifted[:, 0] += _offset(trial, config)
            pairs = cKDTree(shifted).query_pairs(2.0 * r0, output_type="ndarray")
            if pairs.size:
                bad[pairs.max(axis=1)] = True
        if not bad.any():
            return pos, trial
        pos[bad] = rng.uniform(-h, h, size=(int(bad.sum()), 3))
    raise RuntimeError("hard-core parent placement did not converge")


def _scatter(config, rng, centres, trial, fc_pos, fc_trial):
    """Gaussian scatter around ``centres``, redrawn until outside the excluded balls."""
    prm = config.params
    pts = centres + prm.sigma * rng.standard_normal(centres.shape)
    tree = None
    if config.exclusion_mode == "full_exclusion":
        all_fc = np.concatenate([np.zeros((trial.max() + 1 if trial.size else 0, 3)), fc_pos])
        all_trial = np.concatenate([np.arange(trial.max() + 1 if trial.size else 0), fc_trial])
        shifted = all_fc.copy()
        shifted[:, 0] += _offset(all_trial, config)
        tree = cKDTree(shifted) if shifted.shape[0] else None
    todo = np.arange(pts.shape[0])
    for _ in range(MAX_REJECTION_ROUNDS):
        sub = pts[todo]
        if tree is None:
            bad = np.einsum("ij,ij->i", sub, sub) <= prm.r0 ** 2
        else:
            q = sub.copy()
            q[:, 0] += _offset(trial[todo], config)
            dist, _ = tree.query(q, k=1, distance_upper_bound=prm.r0 * (1 + 1e-12))
            bad = dist <= prm.r0
        todo = todo[bad]
        if todo.size == 0:
            return pts
        pts[todo] = centres[todo] + prm.sigma * rng.standard_normal((todo.size, 3))
    raise RuntimeError("transmitter placement rejection cap exceeded (sigma << r0?)")


@dataclass
class _Chunk:
    n: int
    parents: np.ndarray
    parent_trial: np.ndarray
    tx: np.ndarray              # (P*L, 3)
    tx_trial: np.ndarray
    tx_slot: np.ndarray         # 0-based slot column
    tx_symbol: np.ndarray
    intra: np.ndarray           # (n*(L-1), 3)
    intra_trial: np.ndarray
    intra_slot: np.ndarray
    intra_symbol: np.ndarray
    ref_pos: np.ndarray         # (n, 3)
    ref_symbol: np.ndarray      # (n,)


def _sample_chunk(config: TrialConfig, rng: np.random.Generator, n: int) -> _Chunk:
    prm = config.params
    L, M = prm.L, prm.M
    parents, ptrial = _place_parents(config, rng, _draw_counts(config, rng, n))
    P = parents.shape[0]
    centres = np.repeat(parents, L, axis=0)
    tx_trial = np.repeat(ptrial, L)
    tx_slot = np.tile(np.arange(L), P)
    tx = _scatter(config, rng, centres, tx_trial, parents, ptrial)
    tx_symbol = rng.integers(0, M, size=P * L)

    intra_trial = np.repeat(np.arange(n), L - 1)
    intra_slot = np.tile(np.arange(L - 1), n)
    intra = _scatter(config, rng, np.zeros((n * (L - 1), 3)), intra_trial, parents, ptrial)
    intra_symbol = rng.integers(0, M, size=n * (L - 1))

    direction = rng.standard_normal((n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    ref_pos = prm.y0_norm * direction
    if config.reference_symbol is None:
        ref_symbol = rng.integers(0, M, size=n)
    else:
        ref_symbol = np.full(n, int(config.reference_symbol))
    return _Chunk(n, parents, ptrial, tx, tx_trial, tx_slot, tx_symbol,
                  intra, intra_trial, intra_slot, intra_symbol, ref_pos, ref_symbol)


def _slot_times(params: SystemParams) -> np.ndarray:
    # column c holds slot i = c + 1, observed (L - i + 1) T after release
    return np.array([(params.L - c) * params.T for c in range(params.L)])


def _interference(config: TrialConfig, ch: _Chunk):
    prm = config.params
    xs = np.asarray(prm.constellation)
    t_slot = _slot_times(prm)

    def acc(pos, slot, sym, trial):
        d = np.sqrt(np.einsum("ij,ij->i", pos, pos))
        return kernels.accumulate_interference(d, slot, xs[sym], t_slot, trial, ch.n,
                                               prm.D, prm.mu, prm.r0, backend=config.backend)

    return (acc(ch.intra, ch.intra_slot, ch.intra_symbol, ch.intra_trial),
            acc(ch.tx, ch.tx_slot, ch.tx_symbol, ch.tx_trial))


def _run_chunk(config: TrialConfig, seed_seq, n: int, th: DetectorThresholds | None):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    prm = config.params
    ch = _sample_chunk(config, rng, n)
    i_intra, i_inter = _interference(config, ch)
    p = float(p_LL(prm.y0_norm, prm.channel))
    mean = p * np.asarray(prm.constellation)[ch.ref_symbol] + i_intra + i_inter + prm.noise_mean
    counts = rng.poisson(mean)
    err = None if th is None else (decide(counts, th) != ch.ref_symbol)
    return i_intra, i_inter, ch.ref_symbol, counts, err


# ---------------------------------------------------------------------------
# single-trial surface

def sample_parents(config: TrialConfig, rng: np.random.Generator) -> np.ndarray:
    """Cluster centres of one trial, shape ``(P, 3)``."""
    pos, _ = _place_parents(config, rng, _draw_counts(config, rng, 1))
    return pos


def sample_realization(config: TrialConfig, rng: np.random.Generator) -> NetworkRealization:
    prm = config.params
    ch = _sample_chunk(config, rng, 1)
    P = ch.parents.shape[0]
    return NetworkRealization(
        parents=ch.parents,
        transmitters=ch.tx.reshape(P, prm.L, 3),
        transmitter_symbols=ch.tx_symbol.reshape(P, prm.L),
        intra_positions=ch.intra.reshape(prm.L - 1, 3),
        intra_symbols=ch.intra_symbol,
        reference_position=ch.ref_pos[0],
        reference_symbol=int(ch.ref_symbol[0]),
    )


def realization_interference(real: NetworkRealization, params: SystemParams, backend=None):
    """``(I_intra, I_inter)`` of one realisation, in expected molecules."""
    xs = np.asarray(params.constellation)
    t_slot = _slot_times(params)

    def acc(pos, sym, slot):
        pos = pos.reshape(-1, 3)
        d = np.sqrt(np.einsum("ij,ij->i", pos, pos))
        return float(kernels.accumulate_interference(
            d, slot, xs[sym.ravel()], t_slot, np.zeros(d.size, dtype=np.int64), 1,
            params.D, params.mu, params.r0, backend=backend)[0])

    n_par = real.transmitters.shape[0]
    return (acc(real.intra_positions, real.intra_symbols, np.arange(params.L - 1)),
            acc(real.transmitters, real.transmitter_symbols, np.tile(np.arange(params.L), n_par)))


def received_count(real: NetworkRealization, params: SystemParams, rng: np.random.Generator) -> int:
    """Poisson molecule count at the reference receiver at the end of slot ``L``."""
    i_intra, i_inter = realization_interference(real, params)
    signal = float(p_LL(params.y0_norm, params.channel)) * params.constellation[real.reference_symbol]
    return int(rng.poisson(signal + i_intra + i_inter + params.noise_mean))


# ---------------------------------------------------------------------------
# batch runs

def _chunks(config: TrialConfig):
    sizes = [config.chunk_size] * (config.trials // config.chunk_size)
    if config.trials % config.chunk_size:
        sizes.append(config.trials % config.chunk_size)
    seeds = np.random.SeedSequence(config.seed).spawn(len(sizes))
    return list(zip(seeds, sizes))


def _collect(config: TrialConfig, th):
    jobs = _chunks(config)
    if config.workers == 1:
        parts = [_run_chunk(config, s, n, th) for s, n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(lambda job: _run_chunk(config, job[0], job[1], th), jobs))
    return [np.concatenate([p[i] for p in parts]) if parts[0][i] is not None else None
            for i in range(5)]


def _mean_se(v):
    v = np.asarray(v, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se


def run_error_trials(config: TrialConfig, thresholds: DetectorThresholds | None = None) -> SimResult:
    """Symbol error rate of the threshold detector over ``config.trials`` trials.

    Thresholds default to the analytical ones for ``config.params``.
    """
    prm = config.params
    if thresholds is None:
        thresholds = compute_thresholds(prm, interference_stats(prm))
    i_intra, i_inter, sym, _, err = _collect(config, thresholds)
    rate = float(err.mean())
    per_symbol = [float(err[sym == j].mean()) if np.any(sym == j) else math.nan for j in range(prm.M)]
    return _summarise(config, i_intra, i_inter, rate, per_symbol, thresholds)


def estimate_interference_stats(config: TrialConfig):
    """Sample means of intra/inter interference and of ``exp(-s I)``."""
    i_intra, i_inter, _, _, _ = _collect(config, None)
    res = _summarise(config, i_intra, i_inter, math.nan, [], None)
    return res.mean_intra, res.mean_inter, res.lt_estimates, res


def _summarise(config, i_intra, i_inter, rate, per_symbol, th):
    n = i_intra.size
    m_a, se_a = _mean_se(i_intra)
    m_e, se_e = _mean_se(i_inter)
    total = i_intra + i_inter
    lt = {float(s): _mean_se(np.exp(-s * total)) for s in config.lt_s}
    stderr = math.sqrt(rate * (1.0 - rate) / n) if math.isfinite(rate) else math.nan
    return SimResult(n, rate, stderr, m_a, m_e, se_a, se_e, lt, per_symbol, th)
