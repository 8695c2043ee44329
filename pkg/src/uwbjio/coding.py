"""Convolutional coding for the coded-BER pipeline.

A rate-1/3 mother code (three octal generators, zero-terminated) is
punctured down to rate 2/3 on a two-input-bit cycle.  Decoding is soft
maximum-likelihood over the mother trellis with zero-metric erasures at the
punctured positions; coded bits map to antipodal symbols as ``x = 1 - 2b``.

Note the default generator triple carries a duplicated polynomial and a
constraint length implied by the widest generator (octal 7 -> 3); both knobs
stay configurable.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

# keep generator 0 every step, generator 1 on even steps: 3 coded bits per 2
# input bits (rate 2/3)
DEFAULT_PUNCTURE = ((1, 1), (1, 0), (0, 0))


class CodingError(ValueError):
    """Raised for invalid code parameters or stream lengths."""


@dataclass(frozen=True)
class CodeConfig:
    generators: tuple[int, ...] = (0o7, 0o5, 0o5)
    constraint_length: int = 3
    puncture: tuple[tuple[int, ...], ...] = DEFAULT_PUNCTURE

    def __post_init__(self):
        kc = self.constraint_length
        if kc < 2:
            raise CodingError("constraint length must be >= 2")
        for g in self.generators:
            if not 0 < g < (1 << kc):
                raise CodingError(f"generator {g:o} (octal) does not fit constraint length {kc}")
        pat = np.asarray(self.puncture)
        if pat.shape != (len(self.generators), 2):
            raise CodingError("puncture pattern needs one row per generator, two columns")
        if int(pat.sum()) != 3:
            raise CodingError("puncture pattern must keep exactly 3 bits per 2 inputs")
        if (pat.sum(axis=0) == 0).any():
            raise CodingError("puncture pattern drops an entire input position")

    @property
    def n_out(self) -> int:
        return len(self.generators)

    @property
    def n_states(self) -> int:
        return 1 << (self.constraint_length - 1)


def _branch_outputs(cfg: CodeConfig) -> np.ndarray:
    """out[state, input, generator] over the trellis; state keeps the most
    recent input in its high bit."""
    kc = cfg.constraint_length
    out = np.zeros((cfg.n_states, 2, cfg.n_out), dtype=np.uint8)
    for s in range(cfg.n_states):
        for u in (0, 1):
            reg = (u << (kc - 1)) | s
            for g, gen in enumerate(cfg.generators):
                out[s, u, g] = (reg & gen).bit_count() & 1
    return out


def _next_states(cfg: CodeConfig) -> np.ndarray:
    kc = cfg.constraint_length
    nxt = np.zeros((cfg.n_states, 2), dtype=np.int64)
    for s in range(cfg.n_states):
        for u in (0, 1):
            nxt[s, u] = ((u << (kc - 1)) | s) >> 1
    return nxt


def _keep_mask(cfg: CodeConfig, n_steps: int) -> np.ndarray:
    pat = np.asarray(cfg.puncture, dtype=bool)  # (n_out, 2)
    cols = np.arange(n_steps) % 2
    return pat[:, cols].T  # (n_steps, n_out)


def punctured_length(cfg: CodeConfig, n_steps: int) -> int:
    return int(_keep_mask(cfg, n_steps).sum())


def _steps_for_punctured_length(cfg: CodeConfig, n_bits: int) -> int:
    per_cycle = int(np.asarray(cfg.puncture).sum())  # bits per 2 steps
    n = max(1, (2 * n_bits) // per_cycle - 2)
    while punctured_length(cfg, n) < n_bits:
        n += 1
    if punctured_length(cfg, n) != n_bits:
        raise CodingError(f"{n_bits} coded bits do not fit the puncture cycle")
    return n


def max_message_bits(cfg: CodeConfig, n_coded_budget: int) -> int:
    """Longest message whose punctured, zero-terminated encoding fits."""
    n = 0
    while punctured_length(cfg, (n + 1) + cfg.constraint_length - 1) <= n_coded_budget:
        n += 1
    return n


def encode(bits: np.ndarray, cfg: CodeConfig = CodeConfig()) -> np.ndarray:
    """Zero-terminated mother encoding, punctured.  Returns uint8 bits."""
    bits = np.asarray(bits).astype(np.uint8).ravel()
    if bits.size < 1:
        raise CodingError("need at least one message bit")
    kc = cfg.constraint_length
    stream = np.concatenate([bits, np.zeros(kc - 1, dtype=np.uint8)])
    out_tab = _branch_outputs(cfg)
    nxt_tab = _next_states(cfg)
    mask = _keep_mask(cfg, stream.size)
    out = []
    s = 0
    for t, u in enumerate(stream):
        trio = out_tab[s, u]
        out.extend(trio[mask[t]])
        s = nxt_tab[s, u]
    return np.asarray(out, dtype=np.uint8)


def bits_to_symbols(bits: np.ndarray) -> np.ndarray:
    """Antipodal map: 0 -> +1, 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=float)


def viterbi_decode(soft: np.ndarray, cfg: CodeConfig = CodeConfig()) -> np.ndarray:
    """Soft ML decoding of a punctured stream of +-1-scaled values.

    Erasures (zero branch metric) are inserted at the punctured positions.
    The path metric is the correlation with the branch symbols, so decisions
    are invariant to positive scaling of the inputs.  Metric ties resolve
    toward input bit 0 and the lower-numbered state; the traceback starts at
    state 0 (zero-terminated code).
    """
    soft = np.asarray(soft, dtype=float).ravel()
    n_steps = _steps_for_punctured_length(cfg, soft.size)
    if n_steps <= cfg.constraint_length - 1:
        raise CodingError("stream too short for the tail")
    mask = _keep_mask(cfg, n_steps)
    llr = np.zeros((n_steps, cfg.n_out))
    llr[mask] = soft

    out_tab = _branch_outputs(cfg)
    nxt_tab = _next_states(cfg)
    branch_sym = 1.0 - 2.0 * out_tab.astype(float)  # (n_states, 2, n_out)
    n_states = cfg.n_states

    neg_inf = -np.inf
    pm = np.full(n_states, neg_inf)
    pm[0] = 0.0
    prev_state = np.zeros((n_steps, n_states), dtype=np.int64)
    prev_bit = np.zeros((n_steps, n_states), dtype=np.uint8)
    for t in range(n_steps):
        new_pm = np.full(n_states, neg_inf)
        for s in range(n_states):
            if pm[s] == neg_inf:
                continue
            for u in (0, 1):
                metric = pm[s] + float(branch_sym[s, u] @ llr[t])
                ns = nxt_tab[s, u]
                if metric > new_pm[ns]:
                    new_pm[ns] = metric
                    prev_state[t, ns] = s
                    prev_bit[t, ns] = u
        pm = new_pm

    bits = np.zeros(n_steps, dtype=np.uint8)
    s = 0
    for t in range(n_steps - 1, -1, -1):
        bits[t] = prev_bit[t, s]
        s = prev_state[t, s]
    return bits[: n_steps - (cfg.constraint_length - 1)]


def free_distance(cfg: CodeConfig = CodeConfig()) -> int:
    """Free distance of the (unpunctured) mother code by trellis search.

    Dijkstra over output weight: cheapest detour that leaves the zero state
    and merges back.
    """
    out_tab = _branch_outputs(cfg)
    nxt_tab = _next_states(cfg)
    weights = out_tab.sum(axis=2).astype(int)  # (n_states, 2)
    start = nxt_tab[0, 1]
    best = {start: int(weights[0, 1])}
    heap = [(int(weights[0, 1]), int(start))]
    while heap:
        wgt, s = heapq.heappop(heap)
        if s == 0:
            return wgt
        if wgt > best.get(s, np.inf):
            continue
        for u in (0, 1):
            ns = int(nxt_tab[s, u])
            if ns == 0 and u == 1:
                continue  # re-leaving the zero state is a new detour
            nw = wgt + int(weights[s, u])
            if nw < best.get(ns, np.inf):
                best[ns] = nw
                heapq.heappush(heap, (nw, ns))
    raise CodingError("zero state unreachable; catastrophic generator set")
