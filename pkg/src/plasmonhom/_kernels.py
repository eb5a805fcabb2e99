"""Compiled single-pass kernels over sorted time-tag arrays."""
import numpy as np
from numba import njit


@njit(cache=True)
def merge_sorted(a, b):
    out = np.empty(a.size + b.size, dtype=np.int64)
    i = j = k = 0
    while i < a.size and j < b.size:
        if a[i] <= b[j]:
            out[k] = a[i]
            i += 1
        else:
            out[k] = b[j]
            j += 1
        k += 1
    while i < a.size:
        out[k] = a[i]
        i += 1
        k += 1
    while j < b.size:
        out[k] = b[j]
        j += 1
        k += 1
    return out


@njit(cache=True)
def merge_channels(t0, t1):
    """Merge two sorted channel streams; ties put channel 0 first."""
    n = t0.size + t1.size
    ts = np.empty(n, dtype=np.int64)
    ch = np.empty(n, dtype=np.uint8)
    i = j = k = 0
    while i < t0.size and j < t1.size:
        if t0[i] <= t1[j]:
            ts[k] = t0[i]
            ch[k] = 0
            i += 1
        else:
            ts[k] = t1[j]
            ch[k] = 1
            j += 1
        k += 1
    while i < t0.size:
        ts[k] = t0[i]
        ch[k] = 0
        i += 1
        k += 1
    while j < t1.size:
        ts[k] = t1[j]
        ch[k] = 1
        j += 1
        k += 1
    return ts, ch


@njit(cache=True)
def apply_dead_time(t, dead):
    """Drop events closer than ``dead`` to the previous kept event."""
    keep = np.empty(t.size, dtype=np.bool_)
    last = -dead - 1
    for i in range(t.size):
        if t[i] - last >= dead:
            keep[i] = True
            last = t[i]
        else:
            keep[i] = False
    return t[keep]


@njit(cache=True)
def is_sorted(t):
    for i in range(1, t.size):
        if t[i] < t[i - 1]:
            return False
    return True


@njit(cache=True)
def greedy_coincidences(ts, ch, window):
    """Count B1/B2 pairs with ``2 |t1 - t2| <= window``, one use per record.

    Unmatched records wait in a FIFO; every pending record shares a channel
    because an opposite-channel arrival inside the window would have paired.
    A new record pairs with the earliest pending record of the other channel
    that is still inside the window.
    """
    n = ts.size
    cap = 1024
    pending = np.empty(cap, dtype=np.int64)
    head = 0
    size = 0
    pend_ch = 0
    count = 0
    n0 = 0
    for k in range(n):
        t = ts[k]
        c = ch[k]
        if c == 0:
            n0 += 1
        while size > 0 and 2 * (t - pending[head]) > window:
            head = (head + 1) % cap
            size -= 1
        if size > 0 and pend_ch != c:
            head = (head + 1) % cap
            size -= 1
            count += 1
            continue
        if size == 0:
            pend_ch = c
        elif size == cap:
            grown = np.empty(2 * cap, dtype=np.int64)
            for m in range(size):
                grown[m] = pending[(head + m) % cap]
            pending = grown
            head = 0
            cap *= 2
        pending[(head + size) % cap] = t
        size += 1
    return count, n0, n - n0
