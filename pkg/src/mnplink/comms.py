"""On-off keying link analysis: taps, detection, and symbol error rates.

A transmitter releases a particle pulse for bit 1 and nothing for bit 0,
once per symbol interval T. The receiver samples the particle count at
t_0 into each slot and compares against an integer threshold. Because
the channel is linear in the released particles, the mean count in slot
i is a convolution of the bit sequence with the channel taps
N_ob(t_0 + k T). The exact average symbol error rate follows from
enumerating all bit sequences and modeling the count in each slot as
Poisson with the sequence-dependent mean; the no-ISI closed form
(1/2) exp(-N_ob(t_0)) drops all taps beyond the first.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc


@dataclass(frozen=True)
class OokLink:
    """OOK signaling parameters.

    symbol_interval [s], sample_offset [s] into each slot, integer
    detection threshold, particles released per 1-bit, and the number of
    symbols per frame.
    """

    symbol_interval: float
    sample_offset: float
    threshold: int
    particles_per_pulse: int
    sequence_length: int

    def __post_init__(self):
        if self.symbol_interval <= 0:
            raise ValueError("symbol_interval must be > 0")
        if self.sample_offset <= 0:
            raise ValueError("sample_offset must be > 0")
        if self.threshold < 1 or self.threshold != int(self.threshold):
            raise ValueError("threshold must be an integer >= 1")
        if self.particles_per_pulse < 1:
            raise ValueError("particles_per_pulse must be >= 1")
        if self.sequence_length < 1:
            raise ValueError("sequence_length must be >= 1")


@dataclass(frozen=True)
class ReceivedStatistics:
    """Per-slot mean received counts and the channel taps behind them."""

    mean_counts_per_slot: np.ndarray
    channel_taps: np.ndarray


def channel_taps(link, ir):
    """Channel taps tap[k] = mean count at t_0 + k T from an impulse response.

    The impulse response must contain every required sample time exactly;
    interpolation is not performed. Raises ValueError on a missing time.
    """
    taps = np.empty(link.sequence_length)
    for k in range(link.sequence_length):
        t = link.sample_offset + k * link.symbol_interval
        idx = np.flatnonzero(np.abs(ir.times - t) <= 1e-9 * max(t, 1.0))
        if idx.size == 0:
            raise ValueError(f"impulse response has no sample at t = {t}")
        taps[k] = ir.mean_counts[idx[0]]
    return taps


def slot_means(taps, bits):
    """Mean count per slot for one bit sequence: causal convolution with taps."""
    bits = np.asarray(bits, dtype=float)
    taps = np.asarray(taps, dtype=float)
    return np.convolve(bits, taps)[: bits.size]


def received_statistics(link, taps, bits):
    """Bundle the per-slot means for one sequence with the taps used."""
    taps = np.asarray(taps, dtype=float)
    if taps.size != link.sequence_length:
        raise ValueError("need one tap per symbol slot")
    return ReceivedStatistics(mean_counts_per_slot=slot_means(taps, bits),
                              channel_taps=taps)


def detect(count, threshold):
    """Threshold detector: bit 1 iff count >= threshold."""
    count = np.asarray(count)
    if np.any(count < 0):
        raise ValueError("count must be >= 0")
    out = (count >= threshold).astype(int)
    return out if out.ndim else int(out)


def _poisson_cdf_below(threshold, mean):
    """P(X < threshold) for X ~ Poisson(mean), integer threshold >= 1.

    Uses the regularized upper incomplete gamma identity, which stays
    accurate where direct term summation underflows.
    """
    return gammaincc(threshold, mean)


def ser_exact(link, taps):
    """Exact average SER over all bit sequences under the Poisson count model.

    Enumerates all 2^K equiprobable sequences (K <= 20), forms the
    sequence-dependent slot means by convolution with the taps, and
    averages the per-slot error probability: a missed detection when the
    sent bit is 1, a false alarm when it is 0.
    """
    K = link.sequence_length
    if K > 20:
        raise ValueError("sequence enumeration limited to sequence_length <= 20")
    taps = np.asarray(taps, dtype=float)
    if taps.size != K:
        raise ValueError("need one tap per symbol slot")
    if np.any(taps < 0):
        raise ValueError("taps must be >= 0")

    # all sequences as a (2^K, K) bit matrix, slot means via the lower
    # triangular tap matrix T[i, j] = tap[i - j]
    seq = np.arange(2 ** K)[:, None]
    bits = (seq >> np.arange(K)[None, :]) & 1
    T = np.zeros((K, K))
    for i in range(K):
        T[i, : i + 1] = taps[i::-1]
    means = bits @ T.T
    p_below = _poisson_cdf_below(link.threshold, means)
    err = np.where(bits == 1, p_below, 1.0 - p_below)
    return float(err.mean())


def ser_no_isi(mean_count):
    """No-ISI SER for threshold 1: half the Poisson miss probability."""
    if mean_count < 0:
        raise ValueError("mean_count must be >= 0")
    return 0.5 * np.exp(-mean_count)


def ser_simulated(link, counts, bits):
    """Empirical SER from simulated slot counts, with binomial standard error.

    counts and bits are (frames, K) arrays of sampled receiver counts and
    transmitted bits; detection uses the link threshold.
    """
    counts = np.asarray(counts)
    bits = np.asarray(bits)
    if counts.shape != bits.shape:
        raise ValueError("counts and bits must have matching shapes")
    decisions = detect(counts, link.threshold)
    errors = decisions != bits
    n = errors.size
    p = float(errors.mean())
    stderr = float(np.sqrt(p * (1.0 - p) / n))
    return p, stderr
