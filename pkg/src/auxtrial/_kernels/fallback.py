"""Pure-Python mirror of the compiled chains.

Kept statement-for-statement equivalent to the extension module (same
operation order, libm exp/log via ``math``) so both backends produce
bit-identical draws from the same pre-generated random arrays. Roughly
forty times slower; selected only when the extension is unavailable or
AUXTRIAL_PURE_PYTHON=1.
"""

from __future__ import annotations

from math import exp, log

import numpy as np

TINY = 1e-300


def _logistic(x: float) -> float:
    return 1.0 / (1.0 + exp(-x))


def _joint_group_loglik(cobs, cmis, k, zy0, zy1, zs0, zs1, sigma, nodes, weights):
    ll = 0.0
    nq = len(nodes)
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
        ll += cobs[k][c][3] * log(p11 + TINY)
        ll += cobs[k][c][2] * log(p10 + TINY)
        ll += cobs[k][c][1] * log(p01 + TINY)
        ll += cobs[k][c][0] * log(p00 + TINY)
        ll += cmis[k][2 * c + 1] * log(m1 + TINY)
        ll += cmis[k][2 * c + 0] * log(m0 + TINY)
    return ll


def joint_loglik(cobs, cmis, zy0, zy1, zs0, zs1, sigma, nodes, weights):
    co = np.asarray(cobs, dtype=float).tolist()
    cm = np.asarray(cmis, dtype=float).reshape(len(co), 4).tolist()
    nd = np.asarray(nodes, dtype=float).tolist()
    wt = np.asarray(weights, dtype=float).tolist()
    ll = 0.0
    a = np.asarray(zy0, dtype=float)
    b = np.asarray(zy1, dtype=float)
    c = np.asarray(zs0, dtype=float)
    d = np.asarray(zs1, dtype=float)
    sg = np.asarray(sigma, dtype=float)
    for k in range(len(co)):
        ll += _joint_group_loglik(co, cm, k, a[k], b[k], c[k], d[k], sg[k], nd, wt)
    return ll


def run_joint_chain(cobs, cmis, sigma, iy_mean, iy_sd, is_mean, is_sd,
                    slab_mean, slab_sd, shape_v, shape_o, spike_prob,
                    nodes, weights, normals, uniforms, burn, init_scales,
                    adapt_window):
    co = np.asarray(cobs, dtype=float).tolist()
    K = len(co)
    cm = np.asarray(cmis, dtype=float).reshape(K, 4).tolist()
    sg = np.asarray(sigma, dtype=float).tolist()
    my0 = np.asarray(iy_mean, dtype=float).tolist()
    sy0 = np.asarray(iy_sd, dtype=float).tolist()
    ms0 = np.asarray(is_mean, dtype=float).tolist()
    ss0 = np.asarray(is_sd, dtype=float).tolist()
    m1 = np.asarray(slab_mean, dtype=float).tolist()
    s1 = np.asarray(slab_sd, dtype=float).tolist()
    bv = np.asarray(shape_v, dtype=float).tolist()
    bo = np.asarray(shape_o, dtype=float).tolist()
    nd = np.asarray(nodes, dtype=float).tolist()
    wt = np.asarray(weights, dtype=float).tolist()
    zr = np.asarray(normals, dtype=float)
    ur = np.asarray(uniforms, dtype=float)

    n_sweeps = zr.shape[0]
    n_keep = n_sweeps - burn
    if n_keep <= 0:
        raise ValueError("burn must be smaller than the number of sweeps")

    out_zy0 = np.empty((n_keep, K)); out_zs0 = np.empty((n_keep, K))
    out_zs1 = np.empty((n_keep, K)); out_cy = np.empty((n_keep, K))
    out_spike = np.empty((n_keep, K), dtype=np.uint8)
    acc = np.zeros((K, 6), dtype=np.int64)
    tot = np.zeros((K, 6), dtype=np.int64)

    sc = [list(map(float, init_scales)) for _ in range(K)]
    win_acc = [[0] * 5 for _ in range(K)]
    win_tot = [[0] * 5 for _ in range(K)]

    has_slab = spike_prob < 1.0
    has_spike = spike_prob > 0.0
    zy0 = [0.0] * K; zs0 = [0.0] * K; zs1 = [0.0] * K; cy = [0.0] * K
    spike = [0] * K; ll = [0.0] * K
    for k in range(K):
        zy0[k] = my0[k]
        zs0[k] = ms0[k]
        cy[k] = bv[k] / (bv[k] + bo[k])
        spike[k] = 1 if has_spike else 0
        zs1[k] = 0.0 if spike[k] else m1[k]
        zy1_k = 0.0 if spike[k] else cy[k] * zs1[k]
        ll[k] = _joint_group_loglik(co, cm, k, zy0[k], zy1_k, zs0[k], zs1[k], sg[k], nd, wt)

    kept = 0
    for it in range(n_sweeps):
        for k in range(K):
            zy1_k = 0.0 if spike[k] else cy[k] * zs1[k]

            prop = zy0[k] + sc[k][0] * zr[it, k, 0]
            llp = _joint_group_loglik(co, cm, k, prop, zy1_k, zs0[k], zs1[k], sg[k], nd, wt)
            dlp = (-0.5 * ((prop - my0[k]) / sy0[k]) ** 2
                   + 0.5 * ((zy0[k] - my0[k]) / sy0[k]) ** 2)
            if it >= burn:
                tot[k, 0] += 1
            else:
                win_tot[k][0] += 1
            if log(ur[it, k, 0]) < llp - ll[k] + dlp:
                zy0[k] = prop
                ll[k] = llp
                if it < burn:
                    win_acc[k][0] += 1
                else:
                    acc[k, 0] += 1

            prop = zs0[k] + sc[k][1] * zr[it, k, 1]
            llp = _joint_group_loglik(co, cm, k, zy0[k], zy1_k, prop, zs1[k], sg[k], nd, wt)
            dlp = (-0.5 * ((prop - ms0[k]) / ss0[k]) ** 2
                   + 0.5 * ((zs0[k] - ms0[k]) / ss0[k]) ** 2)
            if it >= burn:
                tot[k, 1] += 1
            else:
                win_tot[k][1] += 1
            if log(ur[it, k, 1]) < llp - ll[k] + dlp:
                zs0[k] = prop
                ll[k] = llp
                if it < burn:
                    win_acc[k][1] += 1
                else:
                    acc[k, 1] += 1

            if has_slab and not spike[k]:
                prop = zs1[k] + sc[k][2] * zr[it, k, 2]
                llp = _joint_group_loglik(co, cm, k, zy0[k], cy[k] * prop, zs0[k], prop,
                                          sg[k], nd, wt)
                dlp = (-0.5 * ((prop - m1[k]) / s1[k]) ** 2
                       + 0.5 * ((zs1[k] - m1[k]) / s1[k]) ** 2)
                if it >= burn:
                    tot[k, 2] += 1
                else:
                    win_tot[k][2] += 1
                if log(ur[it, k, 2]) < llp - ll[k] + dlp:
                    zs1[k] = prop
                    ll[k] = llp
                    if it < burn:
                        win_acc[k][2] += 1
                    else:
                        acc[k, 2] += 1

            prop = cy[k] + sc[k][3] * zr[it, k, 3]
            if 0.0 < prop < 1.0:
                dlp = ((bv[k] - 1.0) * (log(prop) - log(cy[k]))
                       + (bo[k] - 1.0) * (log(1.0 - prop) - log(1.0 - cy[k])))
                if spike[k]:
                    llp = ll[k]
                else:
                    llp = _joint_group_loglik(co, cm, k, zy0[k], prop * zs1[k], zs0[k],
                                              zs1[k], sg[k], nd, wt)
                if it >= burn:
                    tot[k, 3] += 1
                else:
                    win_tot[k][3] += 1
                if log(ur[it, k, 3]) < llp - ll[k] + dlp:
                    cy[k] = prop
                    ll[k] = llp
                    if it < burn:
                        win_acc[k][3] += 1
                    else:
                        acc[k, 3] += 1
            elif it >= burn:
                tot[k, 3] += 1
            else:
                win_tot[k][3] += 1

            # ridge move: rescale (zs1, c_y) keeping their product fixed
            if has_slab and not spike[k]:
                v = sc[k][4] * zr[it, k, 4]
                prop = zs1[k] * exp(v)
                prop2 = cy[k] * exp(-v)
                if it >= burn:
                    tot[k, 4] += 1
                else:
                    win_tot[k][4] += 1
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
                            win_acc[k][4] += 1
                        else:
                            acc[k, 4] += 1

            if has_slab and has_spike:
                lodds = log(1.0 - spike_prob) - log(spike_prob)
                if it >= burn:
                    tot[k, 5] += 1
                if spike[k]:
                    cand = m1[k] + s1[k] * zr[it, k, 5]
                    llp = _joint_group_loglik(co, cm, k, zy0[k], cy[k] * cand, zs0[k],
                                              cand, sg[k], nd, wt)
                    if log(ur[it, k, 5]) < llp - ll[k] + lodds:
                        spike[k] = 0
                        zs1[k] = cand
                        ll[k] = llp
                        if it >= burn:
                            acc[k, 5] += 1
                else:
                    llp = _joint_group_loglik(co, cm, k, zy0[k], 0.0, zs0[k], 0.0,
                                              sg[k], nd, wt)
                    if log(ur[it, k, 5]) < llp - ll[k] - lodds:
                        spike[k] = 1
                        zs1[k] = 0.0
                        ll[k] = llp
                        if it >= burn:
                            acc[k, 5] += 1

        if it < burn and adapt_window > 0 and (it + 1) % adapt_window == 0:
            for k in range(K):
                for m in range(5):
                    if win_tot[k][m] > 0:
                        rate = win_acc[k][m] / float(win_tot[k][m])
                        sc[k][m] = sc[k][m] * exp(0.5 * (rate - 0.4))
                        if sc[k][m] < 1e-3:
                            sc[k][m] = 1e-3
                        elif sc[k][m] > 10.0:
                            sc[k][m] = 10.0
                    win_acc[k][m] = 0
                    win_tot[k][m] = 0

        if it >= burn:
            for k in range(K):
                out_zy0[kept, k] = zy0[k]
                out_zs0[kept, k] = zs0[k]
                out_zs1[kept, k] = 0.0 if spike[k] else zs1[k]
                out_cy[kept, k] = cy[k]
                out_spike[kept, k] = spike[k]
            kept += 1

    return out_zy0, out_zs0, out_zs1, out_cy, out_spike, acc, tot


def _binary_group_loglik(counts, k, z0, z1):
    ll = 0.0
    for c in range(2):
        p = _logistic(z0 + z1 * c)
        ll += counts[k][c][1] * log(p + TINY) + counts[k][c][0] * log(1.0 - p + TINY)
    return ll


def run_binary_chain(counts, i_mean, i_sd, slab_mean, slab_sd, spike_prob,
                     normals, uniforms, burn, init_scales, adapt_window):
    cn = np.asarray(counts, dtype=float).tolist()
    K = len(cn)
    m0 = np.asarray(i_mean, dtype=float).tolist()
    s0 = np.asarray(i_sd, dtype=float).tolist()
    m1 = np.asarray(slab_mean, dtype=float).tolist()
    s1 = np.asarray(slab_sd, dtype=float).tolist()
    zr = np.asarray(normals, dtype=float)
    ur = np.asarray(uniforms, dtype=float)

    n_sweeps = zr.shape[0]
    n_keep = n_sweeps - burn
    if n_keep <= 0:
        raise ValueError("burn must be smaller than the number of sweeps")

    out_z0 = np.empty((n_keep, K)); out_z1 = np.empty((n_keep, K))
    out_spike = np.empty((n_keep, K), dtype=np.uint8)
    acc = np.zeros((K, 3), dtype=np.int64)
    tot = np.zeros((K, 3), dtype=np.int64)

    sc = [list(map(float, init_scales)) for _ in range(K)]
    win_acc = [[0] * 2 for _ in range(K)]
    win_tot = [[0] * 2 for _ in range(K)]

    has_slab = spike_prob < 1.0
    has_spike = spike_prob > 0.0
    z0 = [0.0] * K; z1 = [0.0] * K; spike = [0] * K; ll = [0.0] * K
    for k in range(K):
        z0[k] = m0[k]
        spike[k] = 1 if has_spike else 0
        z1[k] = 0.0 if spike[k] else m1[k]
        ll[k] = _binary_group_loglik(cn, k, z0[k], z1[k])

    kept = 0
    for it in range(n_sweeps):
        for k in range(K):
            prop = z0[k] + sc[k][0] * zr[it, k, 0]
            llp = _binary_group_loglik(cn, k, prop, 0.0 if spike[k] else z1[k])
            dlp = (-0.5 * ((prop - m0[k]) / s0[k]) ** 2
                   + 0.5 * ((z0[k] - m0[k]) / s0[k]) ** 2)
            if it >= burn:
                tot[k, 0] += 1
            else:
                win_tot[k][0] += 1
            if log(ur[it, k, 0]) < llp - ll[k] + dlp:
                z0[k] = prop
                ll[k] = llp
                if it < burn:
                    win_acc[k][0] += 1
                else:
                    acc[k, 0] += 1

            if has_slab and not spike[k]:
                prop = z1[k] + sc[k][1] * zr[it, k, 1]
                llp = _binary_group_loglik(cn, k, z0[k], prop)
                dlp = (-0.5 * ((prop - m1[k]) / s1[k]) ** 2
                       + 0.5 * ((z1[k] - m1[k]) / s1[k]) ** 2)
                if it >= burn:
                    tot[k, 1] += 1
                else:
                    win_tot[k][1] += 1
                if log(ur[it, k, 1]) < llp - ll[k] + dlp:
                    z1[k] = prop
                    ll[k] = llp
                    if it < burn:
                        win_acc[k][1] += 1
                    else:
                        acc[k, 1] += 1

            if has_slab and has_spike:
                lodds = log(1.0 - spike_prob) - log(spike_prob)
                if it >= burn:
                    tot[k, 2] += 1
                if spike[k]:
                    cand = m1[k] + s1[k] * zr[it, k, 2]
                    llp = _binary_group_loglik(cn, k, z0[k], cand)
                    if log(ur[it, k, 2]) < llp - ll[k] + lodds:
                        spike[k] = 0
                        z1[k] = cand
                        ll[k] = llp
                        if it >= burn:
                            acc[k, 2] += 1
                else:
                    llp = _binary_group_loglik(cn, k, z0[k], 0.0)
                    if log(ur[it, k, 2]) < llp - ll[k] - lodds:
                        spike[k] = 1
                        z1[k] = 0.0
                        ll[k] = llp
                        if it >= burn:
                            acc[k, 2] += 1

        if it < burn and adapt_window > 0 and (it + 1) % adapt_window == 0:
            for k in range(K):
                for m in range(2):
                    if win_tot[k][m] > 0:
                        rate = win_acc[k][m] / float(win_tot[k][m])
                        sc[k][m] = sc[k][m] * exp(0.5 * (rate - 0.4))
                        if sc[k][m] < 1e-3:
                            sc[k][m] = 1e-3
                        elif sc[k][m] > 10.0:
                            sc[k][m] = 10.0
                    win_acc[k][m] = 0
                    win_tot[k][m] = 0

        if it >= burn:
            for k in range(K):
                out_z0[kept, k] = z0[k]
                out_z1[kept, k] = 0.0 if spike[k] else z1[k]
                out_spike[kept, k] = spike[k]
            kept += 1

    return out_z0, out_z1, out_spike, acc, tot
