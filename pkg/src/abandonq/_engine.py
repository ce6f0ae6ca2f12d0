"""Compiled event loop for the many-server abandonment simulator.

Everything here is numba-jitted and operates on flat arrays; the
friendly layer lives in des.py.  Event ordering is (time, priority,
insertion sequence) with priorities Completion < Abandonment < Arrival,
so simultaneous events replay deterministically.

The waiting line is a ring buffer keyed by customer id.  Abandonment
events are lazily cancelled: each carries its customer id and fires only
if that customer still occupies its slot.  Virtual-wait probes replay
the stopped-arrival system from a snapshot of the live state without
touching it; probe service draws come from their own generator.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STANDARD = 0
PERTURBED = 1

PRIO_COMPLETE = 0
PRIO_ABANDON = 1
PRIO_ARRIVE = 2

OK = 0
ERR_CLOCK = 1

# out_i slots
I_ARRIVALS = 0
I_COMPLETIONS = 1
I_ABANDONS = 2
I_ARRIVALS_PW = 3
I_COMPLETIONS_PW = 4
I_ABANDONS_PW = 5
I_PHANTOMS = 6
I_X_END = 7
I_PROBES = 8
I_GRID = 9

# out_f slots
F_AREA_Q = 0
F_AREA_Q2 = 1
F_BELOW_N = 2
F_TAU = 3


@njit(cache=True, inline="always")
def _draw(code, p1, p2, p3, rng):
    # codes follow distributions.FAMILY_CODES
    if code == 1:
        return rng.exponential(p1)
    if code == 2:
        return rng.exponential(p1) + rng.exponential(p2)
    if code == 3:
        return rng.lognormal(p1, p2)
    if code == 4:
        if rng.random() < p1:
            return rng.exponential(p2)
        return rng.exponential(p3)
    return p1


@njit(cache=True, inline="always")
def _ev_less(ht, hp, hs, i, j):
    if ht[i] != ht[j]:
        return ht[i] < ht[j]
    if hp[i] != hp[j]:
        return hp[i] < hp[j]
    return hs[i] < hs[j]


@njit(cache=True, inline="always")
def _ev_push(ht, hp, hs, hd, size, t, prio, seq, data):
    i = size
    ht[i] = t
    hp[i] = prio
    hs[i] = seq
    hd[i] = data
    while i > 0:
        parent = (i - 1) // 2
        if _ev_less(ht, hp, hs, i, parent):
            ht[i], ht[parent] = ht[parent], ht[i]
            hp[i], hp[parent] = hp[parent], hp[i]
            hs[i], hs[parent] = hs[parent], hs[i]
            hd[i], hd[parent] = hd[parent], hd[i]
            i = parent
        else:
            break
    return size + 1


@njit(cache=True, inline="always")
def _ev_pop(ht, hp, hs, hd, size):
    t = ht[0]
    prio = hp[0]
    seq = hs[0]
    data = hd[0]
    size -= 1
    ht[0] = ht[size]
    hp[0] = hp[size]
    hs[0] = hs[size]
    hd[0] = hd[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        child = left
        right = left + 1
        if right < size and _ev_less(ht, hp, hs, right, left):
            child = right
        if _ev_less(ht, hp, hs, child, i):
            ht[i], ht[child] = ht[child], ht[i]
            hp[i], hp[child] = hp[child], hp[i]
            hs[i], hs[child] = hs[child], hs[i]
            hd[i], hd[child] = hd[child], hd[i]
            i = child
        else:
            break
    return t, prio, seq, data, size


@njit(cache=True, inline="always")
def _fpush(a, pay, size, v, p):
    i = size
    a[i] = v
    pay[i] = p
    while i > 0:
        parent = (i - 1) // 2
        if a[i] < a[parent]:
            a[i], a[parent] = a[parent], a[i]
            pay[i], pay[parent] = pay[parent], pay[i]
            i = parent
        else:
            break
    return size + 1


@njit(cache=True, inline="always")
def _fpop(a, pay, size):
    v = a[0]
    p = pay[0]
    size -= 1
    a[0] = a[size]
    pay[0] = pay[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        child = left
        right = left + 1
        if right < size and a[right] < a[left]:
            child = right
        if a[child] < a[i]:
            a[i], a[child] = a[child], a[i]
            pay[i], pay[child] = pay[child], pay[i]
            i = child
        else:
            break
    return v, p, size


@njit(cache=True)
def _replay_standard(
    n, comp_time, r_deadline, r_active, r_cid, rcap, head_cid, next_cid, clock,
    svc_code, svc_p1, svc_p2, svc_p3, rng_probe, scratch_t, scratch_p,
):
    """Stopped-arrival wait from a standard-mode snapshot with all n busy.

    After arrivals stop, the headcount can only fall below n at a
    completion that finds nobody left to admit, so a single pass over
    completion epochs suffices.  Customers whose deadlines land before
    the epoch under consideration have already abandoned and are skipped
    for good.
    """
    size = 0
    for s in range(n):
        size = _fpush(scratch_t, scratch_p, size, comp_time[s], 0)
    ptr = head_cid
    while True:
        t, _, size = _fpop(scratch_t, scratch_p, size)
        while ptr < next_cid:
            slot = ptr % rcap
            if r_active[slot] == 1 and r_cid[slot] == ptr and r_deadline[slot] >= t:
                break
            ptr += 1
        if ptr < next_cid:
            sv = _draw(svc_code, svc_p1, svc_p2, svc_p3, rng_probe)
            size = _fpush(scratch_t, scratch_p, size, t + sv, 0)
            ptr += 1
        else:
            return t - clock


@njit(cache=True)
def _replay_perturbed(
    n, x_now, comp_time, comp_real, r_deadline, r_active, r_cid, rcap,
    head_cid, next_cid, clock, svc_code, svc_p1, svc_p2, svc_p3, rng_probe,
):
    """Stopped-arrival wait when servers may hold phantom work.

    Real-customer headcount can drop below n between completions via an
    abandonment, so waiting deadlines are merged with completion epochs.
    Local copies keep the live ring untouched.
    """
    width = next_cid - head_cid
    loc_active = np.zeros(width, np.uint8)
    loc_deadline = np.empty(width)
    n_act = 0
    for k in range(width):
        cid = head_cid + k
        slot = cid % rcap
        if r_active[slot] == 1 and r_cid[slot] == cid:
            loc_active[k] = 1
            loc_deadline[k] = r_deadline[slot]
            n_act += 1
    dh_t = np.empty(n_act + 1)
    dh_i = np.empty(n_act + 1, np.int64)
    dsize = 0
    for k in range(width):
        if loc_active[k] == 1:
            dsize = _fpush(dh_t, dh_i, dsize, loc_deadline[k], k)
    ch_t = np.empty(n + 1)
    ch_r = np.empty(n + 1, np.int64)
    csize = 0
    for s in range(n):
        csize = _fpush(ch_t, ch_r, csize, comp_time[s], np.int64(comp_real[s]))
    xr = x_now
    ptr = 0
    while True:
        dnext = dh_t[0] if dsize > 0 else np.inf
        if dnext < ch_t[0]:
            d, k, dsize = _fpop(dh_t, dh_i, dsize)
            if loc_active[k] == 1:
                loc_active[k] = 0
                xr -= 1
                if xr < n:
                    return d - clock
        else:
            t, real, csize = _fpop(ch_t, ch_r, csize)
            if real == 1:
                xr -= 1
            while ptr < width and loc_active[ptr] == 0:
                ptr += 1
            sv = _draw(svc_code, svc_p1, svc_p2, svc_p3, rng_probe)
            if ptr < width and loc_deadline[ptr] >= t:
                loc_active[ptr] = 0
                ptr += 1
                csize = _fpush(ch_t, ch_r, csize, t + sv, 1)
            else:
                csize = _fpush(ch_t, ch_r, csize, t + sv, 0)
            if xr < n:
                return t - clock


@njit(cache=True)
def run_queue(
    n, mode,
    arr_code, arr_p1, arr_p2, arr_p3,
    svc_code, svc_p1, svc_p2, svc_p3,
    pat_code, pat_p1, pat_p2, pat_p3,
    horizon, warmup, probe_interval,
    init_resid, init_deadlines, first_arrival,
    hist, probe_values, x_grid, grid_dt,
    ring_cap0, heap_cap0,
    rng_arr, rng_svc, rng_pat, rng_probe,
):
    out_i = np.zeros(10, np.int64)
    out_f = np.zeros(6, np.float64)
    out_f[F_TAU] = -1.0

    k0 = init_deadlines.shape[0]

    hcap = heap_cap0
    ht = np.empty(hcap)
    hp = np.empty(hcap, np.int64)
    hs = np.empty(hcap, np.int64)
    hd = np.empty(hcap, np.int64)
    hsize = 0
    seq = 0

    rcap = ring_cap0
    r_deadline = np.empty(rcap)
    r_active = np.zeros(rcap, np.uint8)
    r_cid = np.full(rcap, -1, np.int64)
    head_cid = 0
    next_cid = 0

    comp_time = np.empty(n)
    comp_real = np.ones(n, np.uint8)
    free_slots = np.empty(n, np.int64)
    n_free = 0

    x_now = n + k0
    q_now = k0

    for s in range(n):
        comp_time[s] = init_resid[s]
        hsize = _ev_push(ht, hp, hs, hd, hsize, init_resid[s], PRIO_COMPLETE, seq, s)
        seq += 1
    for k in range(k0):
        slot = next_cid % rcap
        r_deadline[slot] = init_deadlines[k]
        r_active[slot] = 1
        r_cid[slot] = next_cid
        hsize = _ev_push(ht, hp, hs, hd, hsize, init_deadlines[k], PRIO_ABANDON, seq, next_cid)
        seq += 1
        next_cid += 1
    hsize = _ev_push(ht, hp, hs, hd, hsize, first_arrival, PRIO_ARRIVE, seq, -1)
    seq += 1

    clock = 0.0
    hist_len = hist.shape[0]
    probe_cap = probe_values.shape[0]
    grid_len = x_grid.shape[0]
    grid_k = 0
    probe_k = 1
    scratch_t = np.empty(n + 1)
    scratch_p = np.empty(n + 1, np.int64)
    status = OK

    while True:
        t_ev = ht[0]

        # probes fire strictly between events; ties defer to the event
        while out_i[I_PROBES] < probe_cap:
            p = warmup + probe_k * probe_interval
            if p >= horizon or p >= t_ev:
                break
            # accumulate [clock, p)
            while grid_k < grid_len and grid_k * grid_dt < p:
                x_grid[grid_k] = x_now
                grid_k += 1
            lo = clock if clock > warmup else warmup
            d = p - lo
            if d > 0.0:
                qf = float(q_now)
                out_f[F_AREA_Q] += qf * d
                out_f[F_AREA_Q2] += qf * qf * d
                xi = x_now if x_now < hist_len else hist_len - 1
                hist[xi] += d
                if x_now < n:
                    out_f[F_BELOW_N] += d
            clock = p
            if x_now < n:
                w = 0.0
            elif mode == PERTURBED:
                w = _replay_perturbed(
                    n, x_now, comp_time, comp_real, r_deadline, r_active, r_cid,
                    rcap, head_cid, next_cid, clock,
                    svc_code, svc_p1, svc_p2, svc_p3, rng_probe,
                )
            else:
                w = _replay_standard(
                    n, comp_time, r_deadline, r_active, r_cid, rcap,
                    head_cid, next_cid, clock,
                    svc_code, svc_p1, svc_p2, svc_p3, rng_probe, scratch_t, scratch_p,
                )
            probe_values[out_i[I_PROBES]] = w
            out_i[I_PROBES] += 1
            probe_k += 1

        if t_ev >= horizon:
            while grid_k < grid_len and grid_k * grid_dt < horizon:
                x_grid[grid_k] = x_now
                grid_k += 1
            lo = clock if clock > warmup else warmup
            d = horizon - lo
            if d > 0.0:
                qf = float(q_now)
                out_f[F_AREA_Q] += qf * d
                out_f[F_AREA_Q2] += qf * qf * d
                xi = x_now if x_now < hist_len else hist_len - 1
                hist[xi] += d
                if x_now < n:
                    out_f[F_BELOW_N] += d
            clock = horizon
            break

        if hsize + 3 > hcap:
            hcap2 = hcap * 2
            ht2 = np.empty(hcap2)
            hp2 = np.empty(hcap2, np.int64)
            hs2 = np.empty(hcap2, np.int64)
            hd2 = np.empty(hcap2, np.int64)
            ht2[:hsize] = ht[:hsize]
            hp2[:hsize] = hp[:hsize]
            hs2[:hsize] = hs[:hsize]
            hd2[:hsize] = hd[:hsize]
            ht, hp, hs, hd, hcap = ht2, hp2, hs2, hd2, hcap2

        t, prio, _, data, hsize = _ev_pop(ht, hp, hs, hd, hsize)
        if t < clock:
            status = ERR_CLOCK
            break
        # accumulate [clock, t)
        while grid_k < grid_len and grid_k * grid_dt < t:
            x_grid[grid_k] = x_now
            grid_k += 1
        lo = clock if clock > warmup else warmup
        d = t - lo
        if d > 0.0:
            qf = float(q_now)
            out_f[F_AREA_Q] += qf * d
            out_f[F_AREA_Q2] += qf * qf * d
            xi = x_now if x_now < hist_len else hist_len - 1
            hist[xi] += d
            if x_now < n:
                out_f[F_BELOW_N] += d
        clock = t

        if prio == PRIO_ARRIVE:
            out_i[I_ARRIVALS] += 1
            if clock >= warmup:
                out_i[I_ARRIVALS_PW] += 1
            ia = _draw(arr_code, arr_p1, arr_p2, arr_p3, rng_arr)
            hsize = _ev_push(ht, hp, hs, hd, hsize, clock + ia, PRIO_ARRIVE, seq, -1)
            seq += 1
            if mode == STANDARD and n_free > 0:
                s = free_slots[n_free - 1]
                n_free -= 1
                sv = _draw(svc_code, svc_p1, svc_p2, svc_p3, rng_svc)
                comp_time[s] = clock + sv
                comp_real[s] = 1
                hsize = _ev_push(ht, hp, hs, hd, hsize, comp_time[s], PRIO_COMPLETE, seq, s)
                seq += 1
                x_now += 1
            else:
                pt = _draw(pat_code, pat_p1, pat_p2, pat_p3, rng_pat)
                if next_cid - head_cid == rcap:
                    while head_cid < next_cid and r_active[head_cid % rcap] == 0:
                        head_cid += 1
                    if next_cid - head_cid == rcap:
                        rcap2 = rcap * 2
                        rd2 = np.empty(rcap2)
                        ra2 = np.zeros(rcap2, np.uint8)
                        rc2 = np.full(rcap2, -1, np.int64)
                        for cid in range(head_cid, next_cid):
                            old = cid % rcap
                            if r_active[old] == 1 and r_cid[old] == cid:
                                new = cid % rcap2
                                rd2[new] = r_deadline[old]
                                ra2[new] = 1
                                rc2[new] = cid
                        r_deadline, r_active, r_cid, rcap = rd2, ra2, rc2, rcap2
                slot = next_cid % rcap
                r_deadline[slot] = clock + pt
                r_active[slot] = 1
                r_cid[slot] = next_cid
                hsize = _ev_push(ht, hp, hs, hd, hsize, clock + pt, PRIO_ABANDON, seq, next_cid)
                seq += 1
                next_cid += 1
                q_now += 1
                x_now += 1
        elif prio == PRIO_COMPLETE:
            s = data
            if comp_real[s] == 1:
                out_i[I_COMPLETIONS] += 1
                if clock >= warmup:
                    out_i[I_COMPLETIONS_PW] += 1
                x_now -= 1
            else:
                out_i[I_PHANTOMS] += 1
            admitted = False
            while head_cid < next_cid:
                slot = head_cid % rcap
                if r_active[slot] == 0 or r_cid[slot] != head_cid:
                    head_cid += 1
                    continue
                # head is active, so its deadline has not fired yet
                r_active[slot] = 0
                head_cid += 1
                q_now -= 1
                sv = _draw(svc_code, svc_p1, svc_p2, svc_p3, rng_svc)
                comp_time[s] = clock + sv
                comp_real[s] = 1
                hsize = _ev_push(ht, hp, hs, hd, hsize, comp_time[s], PRIO_COMPLETE, seq, s)
                seq += 1
                admitted = True
                break
            if not admitted:
                if mode == PERTURBED:
                    sv = _draw(svc_code, svc_p1, svc_p2, svc_p3, rng_svc)
                    comp_time[s] = clock + sv
                    comp_real[s] = 0
                    hsize = _ev_push(ht, hp, hs, hd, hsize, comp_time[s], PRIO_COMPLETE, seq, s)
                    seq += 1
                else:
                    free_slots[n_free] = s
                    n_free += 1
        else:
            cid = data
            slot = cid % rcap
            if r_active[slot] == 1 and r_cid[slot] == cid:
                r_active[slot] = 0
                q_now -= 1
                x_now -= 1
                out_i[I_ABANDONS] += 1
                if clock >= warmup:
                    out_i[I_ABANDONS_PW] += 1

        if x_now < n and out_f[F_TAU] < 0.0:
            out_f[F_TAU] = clock

    while grid_k < grid_len:
        x_grid[grid_k] = x_now
        grid_k += 1
    out_i[I_X_END] = x_now
    out_i[I_GRID] = grid_k
    return status, out_i, out_f
