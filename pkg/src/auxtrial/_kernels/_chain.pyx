# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Metropolis-within-Gibbs chains for the outcome models.

Both chains consume pre-generated random arrays (one slot per move per sweep)
so that results are reproducible and bit-identical to the pure-Python
fallback, which mirrors these loops statement for statement.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

cdef double TINY = 1e-300


cdef inline double _logistic(double x) nogil:
    return 1.0 / (1.0 + exp(-x))


cdef double _joint_group_loglik(double[:, :, ::1] cobs, double[:, ::1] cmis, int k_flat,
                                double zy0, double zy1, double zs0, double zs1,
                                double sigma, double[::1] nodes, double[::1] weights) nogil:
    cdef int q, c, nq = nodes.shape[0]
    cdef double ll = 0.0
    cdef double p11, p10, p01, p00, m1, m0, py, ps, w, e, etay, etas
    for c in range(2):
        etay = zy0 + zy1 * c
        etas = zs0 + zs1 * c
        p11 = p10 = p01 = p00 = m1 = m0 = 0.0
        for q in range(nq):
            e = sigma * nodes[q]
            w = weights[q]
            py = _logistic(etay + e)
            ps = _logistic(etas + e)
            p11 += w * py * ps
            p10 += w * py * (1.0 - ps)
            p01 += w * (1.0 - py) * ps
            p00 += w * (1.0 - py) * (1.0 - ps)
            m1 += w * ps
            m0 += w * (1.0 - ps)
        ll += cobs[k_flat, c, 3] * log(p11 + TINY)
        ll += cobs[k_flat, c, 2] * log(p10 + TINY)
        ll += cobs[k_flat, c, 1] * log(p01 + TINY)
        ll += cobs[k_flat, c, 0] * log(p00 + TINY)
        ll += cmis[k_flat, 2 * c + 1] * log(m1 + TINY)
        ll += cmis[k_flat, 2 * c + 0] * log(m0 + TINY)
    return ll


def joint_loglik(cobs, cmis, zy0, zy1, zs0, zs1, sigma, nodes, weights):
    """Log-likelihood of cell counts under the shared-latent joint model.

    cobs[k, c, 2*y + s] counts patients with observed primary outcome;
    cmis[k, 2*c + s] counts patients whose primary outcome is pending.
    """
    cdef double[:, :, ::1] co = np.ascontiguousarray(cobs, dtype=np.float64)
    cdef double[:, ::1] cm = np.ascontiguousarray(
        np.asarray(cmis, dtype=np.float64).reshape(co.shape[0], 4))
    cdef double[::1] nd = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef double[::1] wt = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[::1] a = np.ascontiguousarray(zy0, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(zy1, dtype=np.float64)
    cdef double[::1] cc = np.ascontiguousarray(zs0, dtype=np.float64)
    cdef double[::1] d = np.ascontiguousarray(zs1, dtype=np.float64)
    cdef double[::1] sg = np.ascontiguousarray(sigma, dtype=np.float64)
    cdef double ll = 0.0
    cdef int k
    for k in range(co.shape[0]):
        ll += _joint_group_loglik(co, cm, k, a[k], b[k], cc[k], d[k], sg[k], nd, wt)
    return ll


def run_joint_chain(cobs, cmis, sigma,
                    iy_mean, iy_sd, is_mean, is_sd, slab_mean, slab_sd,
                    shape_v, shape_o, double spike_prob,
                    nodes, weights, normals, uniforms,
                    int burn, init_scales, int adapt_window):
    """Metropolis-within-Gibbs over (zy0, zs0, zs1, c_y, spike) per group.

    normals/uniforms have shape (sweeps, K, 6): slots 0-3 drive the four
    random-walk moves, slot 4 a product-preserving ridge move
    (zs1, c_y) -> (zs1 e^v, c_y e^-v) that leaves the primary-outcome slope
    unchanged (the posterior concentrates on that hyperbola when the two
    outcomes disagree, where coordinatewise walks stall), and slot 5 the
    spike switch (its normal is the slab proposal). Proposal scales adapt
    toward 40% acceptance during burn-in and are frozen afterwards.
    Returns post-burn draws and per-move acceptance counts.
    """
    cdef double[:, :, ::1] co = np.ascontiguousarray(cobs, dtype=np.float64)
    cdef double[:, ::1] cm = np.ascontiguousarray(np.asarray(cmis, dtype=np.float64).reshape(co.shape[0], 4))
    cdef double[::1] sg = np.ascontiguousarray(sigma, dtype=np.float64)
    cdef double[::1] my0 = np.ascontiguousarray(iy_mean, dtype=np.float64)
    cdef double[::1] sy0 = np.ascontiguousarray(iy_sd, dtype=np.float64)
    cdef double[::1] ms0 = np.ascontiguousarray(is_mean, dtype=np.float64)
    cdef double[::1] ss0 = np.ascontiguousarray(is_sd, dtype=np.float64)
    cdef double[::1] m1 = np.ascontiguousarray(slab_mean, dtype=np.float64)
    cdef double[::1] s1 = np.ascontiguousarray(slab_sd, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(shape_v, dtype=np.float64)
    cdef double[::1] bo = np.ascontiguousarray(shape_o, dtype=np.float64)
    cdef double[::1] nd = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef double[::1] wt = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[:, :, ::1] zr = np.ascontiguousarray(normals, dtype=np.float64)
    cdef double[:, :, ::1] ur = np.ascontiguousarray(uniforms, dtype=np.float64)

    cdef int n_sweeps = zr.shape[0]
    cdef int K = co.shape[0]
    cdef int n_keep = n_sweeps - burn
    if n_keep <= 0:
        raise ValueError("burn must be smaller than the number of sweeps")

    out_zy0 = np.empty((n_keep, K)); out_zs0 = np.empty((n_keep, K))
    out_zs1 = np.empty((n_keep, K)); out_cy = np.empty((n_keep, K))
    out_spike = np.empty((n_keep, K), dtype=np.uint8)
    acc = np.zeros((K, 6), dtype=np.int64)
    tot = np.zeros((K, 6), dtype=np.int64)
    cdef double[:, ::1] o_zy0 = out_zy0
    cdef double[:, ::1] o_zs0 = out_zs0
    cdef double[:, ::1] o_zs1 = out_zs1
    cdef double[:, ::1] o_cy = out_cy
    cdef cnp.uint8_t[:, ::1] o_spike = out_spike
    cdef long[:, ::1] acc_v = acc
    cdef long[:, ::1] tot_v = tot

    scales_arr = np.tile(np.asarray(init_scales, dtype=np.float64), (K, 1))
    cdef double[:, ::1] sc = scales_arr
    win_acc_arr = np.zeros((K, 5), dtype=np.int64)
    cdef long[:, ::1] win_acc = win_acc_arr
    win_tot_arr = np.zeros((K, 5), dtype=np.int64)
    cdef long[:, ::1] win_tot = win_tot_arr

    state_zy0 = np.empty(K); state_zs0 = np.empty(K); state_zs1 = np.empty(K)
    state_cy = np.empty(K)
    state_spike = np.empty(K, dtype=np.uint8)
    gll = np.empty(K)
    cdef double[::1] zy0 = state_zy0
    cdef double[::1] zs0 = state_zs0
    cdef double[::1] zs1 = state_zs1
    cdef double[::1] cy = state_cy
    cdef cnp.uint8_t[::1] spike = state_spike
    cdef double[::1] ll = gll

    cdef int k, it, m, kept = 0
    cdef double zy1_k, prop, prop2, v, llp, dlp, lodds, cand, rate
    cdef bint has_slab = spike_prob < 1.0
    cdef bint has_spike = spike_prob > 0.0

    for k in range(K):
        zy0[k] = my0[k]
        zs0[k] = ms0[k]
        cy[k] = bv[k] / (bv[k] + bo[k])
        spike[k] = 1 if has_spike else 0
        zs1[k] = 0.0 if spike[k] else m1[k]
        zy1_k = 0.0 if spike[k] else cy[k] * zs1[k]
        ll[k] = _joint_group_loglik(co, cm, k, zy0[k], zy1_k, zs0[k], zs1[k], sg[k], nd, wt)

    for it in range(n_sweeps):
        for k in range(K):
            zy1_k = 0.0 if spike[k] else cy[k] * zs1[k]

            # intercept for the primary outcome
            prop = zy0[k] + sc[k, 0] * zr[it, k, 0]
            llp = _joint_group_loglik(co, cm, k, prop, zy1_k, zs0[k], zs1[k], sg[k], nd, wt)
            dlp = (-0.5 * ((prop - my0[k]) / sy0[k]) ** 2
                   + 0.5 * ((zy0[k] - my0[k]) / sy0[k]) ** 2)
            if it >= burn:
                tot_v[k, 0] += 1
            else:
                win_tot[k, 0] += 1
            if log(ur[it, k, 0]) < llp - ll[k] + dlp:
                zy0[k] = prop
                ll[k] = llp
                if it < burn:
                    win_acc[k, 0] += 1
                else:
                    acc_v[k, 0] += 1

            # intercept for the auxiliary outcome
            prop = zs0[k] + sc[k, 1] * zr[it, k, 1]
            llp = _joint_group_loglik(co, cm, k, zy0[k], zy1_k, prop, zs1[k], sg[k], nd, wt)
            dlp = (-0.5 * ((prop - ms0[k]) / ss0[k]) ** 2
                   + 0.5 * ((zs0[k] - ms0[k]) / ss0[k]) ** 2)
            if it >= burn:
                tot_v[k, 1] += 1
            else:
                win_tot[k, 1] += 1
            if log(ur[it, k, 1]) < llp - ll[k] + dlp:
                zs0[k] = prop
                ll[k] = llp
                if it < burn:
                    win_acc[k, 1] += 1
                else:
                    acc_v[k, 1] += 1

            # auxiliary-effect slope (slab state only)
            if has_slab and not spike[k]:
                prop = zs1[k] + sc[k, 2] * zr[it, k, 2]
                llp = _joint_group_loglik(co, cm, k, zy0[k], cy[k] * prop, zs0[k], prop,
                                          sg[k], nd, wt)
                dlp = (-0.5 * ((prop - m1[k]) / s1[k]) ** 2
                       + 0.5 * ((zs1[k] - m1[k]) / s1[k]) ** 2)
                if it >= burn:
                    tot_v[k, 2] += 1
                else:
                    win_tot[k, 2] += 1
                if log(ur[it, k, 2]) < llp - ll[k] + dlp:
                    zs1[k] = prop
                    ll[k] = llp
                    if it < burn:
                        win_acc[k, 2] += 1
                    else:
                        acc_v[k, 2] += 1

            # effect fraction; likelihood-free under the spike
            prop = cy[k] + sc[k, 3] * zr[it, k, 3]
            if 0.0 < prop < 1.0:
                dlp = ((bv[k] - 1.0) * (log(prop) - log(cy[k]))
                       + (bo[k] - 1.0) * (log(1.0 - prop) - log(1.0 - cy[k])))
                if spike[k]:
                    llp = ll[k]
                else:
                    llp = _joint_group_loglik(co, cm, k, zy0[k], prop * zs1[k], zs0[k],
                                              zs1[k], sg[k], nd, wt)
                if it >= burn:
                    tot_v[k, 3] += 1
                else:
                    win_tot[k, 3] += 1
                if log(ur[it, k, 3]) < llp - ll[k] + dlp:
                    cy[k] = prop
                    ll[k] = llp
                    if it < burn:
                        win_acc[k, 3] += 1
                    else:
                        acc_v[k, 3] += 1
            elif it >= burn:
                tot_v[k, 3] += 1
            else:
                win_tot[k, 3] += 1

            # ridge move: rescale (zs1, c_y) keeping their product fixed
            # (unit Jacobian, symmetric log-scale step, plain ratio applies)
            if has_slab and not spike[k]:
                v = sc[k, 4] * zr[it, k, 4]
                prop = zs1[k] * exp(v)
                prop2 = cy[k] * exp(-v)
                if it >= burn:
                    tot_v[k, 4] += 1
                else:
                    win_tot[k, 4] += 1
                if 0.0 < prop2 < 1.0:
                    llp = _joint_group_loglik(co, cm, k, zy0[k], prop2 * prop, zs0[k],
                                              prop, sg[k], nd, wt)
                    dlp = (-0.5 * ((prop - m1[k]) / s1[k]) ** 2
                           + 0.5 * ((zs1[k] - m1[k]) / s1[k]) ** 2
                           + (bv[k] - 1.0) * (log(prop2) - log(cy[k]))
                           + (bo[k] - 1.0) * (log(1.0 - prop2) - log(1.0 - cy[k])))
                    if log(ur[it, k, 4]) < llp - ll[k] + dlp:
                        zs1[k] = prop
                        cy[k] = prop2
                        ll[k] = llp
                        if it < burn:
                            win_acc[k, 4] += 1
                        else:
                            acc_v[k, 4] += 1

            # spike switch with the slab prior as jump proposal
            if has_slab and has_spike:
                lodds = log(1.0 - spike_prob) - log(spike_prob)
                if it >= burn:
                    tot_v[k, 5] += 1
                if spike[k]:
                    cand = m1[k] + s1[k] * zr[it, k, 5]
                    llp = _joint_group_loglik(co, cm, k, zy0[k], cy[k] * cand, zs0[k],
                                              cand, sg[k], nd, wt)
                    if log(ur[it, k, 5]) < llp - ll[k] + lodds:
                        spike[k] = 0
                        zs1[k] = cand
                        ll[k] = llp
                        if it >= burn:
                            acc_v[k, 5] += 1
                else:
                    llp = _joint_group_loglik(co, cm, k, zy0[k], 0.0, zs0[k], 0.0,
                                              sg[k], nd, wt)
                    if log(ur[it, k, 5]) < llp - ll[k] - lodds:
                        spike[k] = 1
                        zs1[k] = 0.0
                        ll[k] = llp
                        if it >= burn:
                            acc_v[k, 5] += 1

        if it < burn and adapt_window > 0 and (it + 1) % adapt_window == 0:
            for k in range(K):
                for m in range(5):
                    if win_tot[k, m] > 0:
                        rate = win_acc[k, m] / <double>win_tot[k, m]
                        sc[k, m] = sc[k, m] * exp(0.5 * (rate - 0.4))
                        if sc[k, m] < 1e-3:
                            sc[k, m] = 1e-3
                        elif sc[k, m] > 10.0:
                            sc[k, m] = 10.0
                    win_acc[k, m] = 0
                    win_tot[k, m] = 0

        if it >= burn:
            for k in range(K):
                o_zy0[kept, k] = zy0[k]
                o_zs0[kept, k] = zs0[k]
                o_zs1[kept, k] = 0.0 if spike[k] else zs1[k]
                o_cy[kept, k] = cy[k]
                o_spike[kept, k] = spike[k]
            kept += 1

    return out_zy0, out_zs0, out_zs1, out_cy, out_spike, acc, tot


cdef inline double _binary_group_loglik(double[:, :, ::1] counts, int k,
                                        double z0, double z1) nogil:
    cdef double ll = 0.0, p
    cdef int c
    for c in range(2):
        p = _logistic(z0 + z1 * c)
        ll += counts[k, c, 1] * log(p + TINY) + counts[k, c, 0] * log(1.0 - p + TINY)
    return ll


def run_binary_chain(counts, i_mean, i_sd, slab_mean, slab_sd, double spike_prob,
                     normals, uniforms, int burn, init_scales, int adapt_window):
    """Chain for the single-outcome logistic model (no latent term).

    counts[k, c, y]; normals/uniforms shaped (sweeps, K, 3): slots 0-1 drive
    the intercept and slope random walks, slot 2 the spike switch.
    """
    cdef double[:, :, ::1] cn = np.ascontiguousarray(counts, dtype=np.float64)
    cdef double[::1] m0 = np.ascontiguousarray(i_mean, dtype=np.float64)
    cdef double[::1] s0 = np.ascontiguousarray(i_sd, dtype=np.float64)
    cdef double[::1] m1 = np.ascontiguousarray(slab_mean, dtype=np.float64)
    cdef double[::1] s1 = np.ascontiguousarray(slab_sd, dtype=np.float64)
    cdef double[:, :, ::1] zr = np.ascontiguousarray(normals, dtype=np.float64)
    cdef double[:, :, ::1] ur = np.ascontiguousarray(uniforms, dtype=np.float64)

    cdef int n_sweeps = zr.shape[0]
    cdef int K = cn.shape[0]
    cdef int n_keep = n_sweeps - burn
    if n_keep <= 0:
        raise ValueError("burn must be smaller than the number of sweeps")

    out_z0 = np.empty((n_keep, K)); out_z1 = np.empty((n_keep, K))
    out_spike = np.empty((n_keep, K), dtype=np.uint8)
    acc = np.zeros((K, 3), dtype=np.int64)
    tot = np.zeros((K, 3), dtype=np.int64)
    cdef double[:, ::1] o_z0 = out_z0
    cdef double[:, ::1] o_z1 = out_z1
    cdef cnp.uint8_t[:, ::1] o_spike = out_spike
    cdef long[:, ::1] acc_v = acc
    cdef long[:, ::1] tot_v = tot

    scales_arr = np.tile(np.asarray(init_scales, dtype=np.float64), (K, 1))
    cdef double[:, ::1] sc = scales_arr
    win_acc_arr = np.zeros((K, 2), dtype=np.int64)
    cdef long[:, ::1] win_acc = win_acc_arr
    win_tot_arr = np.zeros((K, 2), dtype=np.int64)
    cdef long[:, ::1] win_tot = win_tot_arr

    state_z0 = np.empty(K); state_z1 = np.empty(K)
    state_spike = np.empty(K, dtype=np.uint8)
    gll = np.empty(K)
    cdef double[::1] z0 = state_z0
    cdef double[::1] z1 = state_z1
    cdef cnp.uint8_t[::1] spike = state_spike
    cdef double[::1] ll = gll

    cdef int k, it, m, kept = 0
    cdef double prop, llp, dlp, lodds, cand, rate
    cdef bint has_slab = spike_prob < 1.0
    cdef bint has_spike = spike_prob > 0.0

    for k in range(K):
        z0[k] = m0[k]
        spike[k] = 1 if has_spike else 0
        z1[k] = 0.0 if spike[k] else m1[k]
        ll[k] = _binary_group_loglik(cn, k, z0[k], z1[k])

    for it in range(n_sweeps):
        for k in range(K):
            prop = z0[k] + sc[k, 0] * zr[it, k, 0]
            llp = _binary_group_loglik(cn, k, prop, 0.0 if spike[k] else z1[k])
            dlp = (-0.5 * ((prop - m0[k]) / s0[k]) ** 2
                   + 0.5 * ((z0[k] - m0[k]) / s0[k]) ** 2)
            if it >= burn:
                tot_v[k, 0] += 1
            else:
                win_tot[k, 0] += 1
            if log(ur[it, k, 0]) < llp - ll[k] + dlp:
                z0[k] = prop
                ll[k] = llp
                if it < burn:
                    win_acc[k, 0] += 1
                else:
                    acc_v[k, 0] += 1

            if has_slab and not spike[k]:
                prop = z1[k] + sc[k, 1] * zr[it, k, 1]
                llp = _binary_group_loglik(cn, k, z0[k], prop)
                dlp = (-0.5 * ((prop - m1[k]) / s1[k]) ** 2
                       + 0.5 * ((z1[k] - m1[k]) / s1[k]) ** 2)
                if it >= burn:
                    tot_v[k, 1] += 1
                else:
                    win_tot[k, 1] += 1
                if log(ur[it, k, 1]) < llp - ll[k] + dlp:
                    z1[k] = prop
                    ll[k] = llp
                    if it < burn:
                        win_acc[k, 1] += 1
                    else:
                        acc_v[k, 1] += 1

            if has_slab and has_spike:
                lodds = log(1.0 - spike_prob) - log(spike_prob)
                if it >= burn:
                    tot_v[k, 2] += 1
                if spike[k]:
                    cand = m1[k] + s1[k] * zr[it, k, 2]
                    llp = _binary_group_loglik(cn, k, z0[k], cand)
                    if log(ur[it, k, 2]) < llp - ll[k] + lodds:
                        spike[k] = 0
                        z1[k] = cand
                        ll[k] = llp
                        if it >= burn:
                            acc_v[k, 2] += 1
                else:
                    llp = _binary_group_loglik(cn, k, z0[k], 0.0)
                    if log(ur[it, k, 2]) < llp - ll[k] - lodds:
                        spike[k] = 1
                        z1[k] = 0.0
                        ll[k] = llp
                        if it >= burn:
                            acc_v[k, 2] += 1

        if it < burn and adapt_window > 0 and (it + 1) % adapt_window == 0:
            for k in range(K):
                for m in range(2):
                    if win_tot[k, m] > 0:
                        rate = win_acc[k, m] / <double>win_tot[k, m]
                        sc[k, m] = sc[k, m] * exp(0.5 * (rate - 0.4))
                        if sc[k, m] < 1e-3:
                            sc[k, m] = 1e-3
                        elif sc[k, m] > 10.0:
                            sc[k, m] = 10.0
                    win_acc[k, m] = 0
                    win_tot[k, m] = 0

        if it >= burn:
            for k in range(K):
                o_z0[kept, k] = z0[k]
                o_z1[kept, k] = 0.0 if spike[k] else z1[k]
                o_spike[kept, k] = spike[k]
            kept += 1

    return out_z0, out_z1, out_spike, acc, tot
