"""Pure-Python twin of the compiled SSA kernel (same arithmetic, same order)."""

from math import log


def ssa_advance(state, rates, t, t_first, dt, out, k, uniforms, pos):
    n_rm, n_ri, n_r = int(state[0]), int(state[1]), int(state[2])
    bind_m, off_m, bind_i, off_i = (float(x) for x in rates)
    n_out = len(out)
    n_u = len(uniforms)
    u = uniforms.tolist()
    k0 = k
    samples = []

    while k < n_out:
        a1 = bind_m * n_r
        a2 = off_m * n_rm
        a3 = bind_i * n_r
        a4 = off_i * n_ri
        a0 = a1 + a2 + a3 + a4
        if a0 <= 0.0:
            samples.extend([n_rm + n_ri] * (n_out - k))
            k = n_out
            break
        if pos + 2 > n_u:
            break
        t_next = t - log(u[pos]) / a0
        bound = n_rm + n_ri
        while k < n_out and t_first + k * dt < t_next:
            samples.append(bound)
            k += 1
        if k >= n_out:
            pos += 2
            t = t_next
            break
        pick = u[pos + 1] * a0
        if pick < a1:
            n_r -= 1
            n_rm += 1
        elif pick < a1 + a2:
            n_rm -= 1
            n_r += 1
        elif pick < a1 + a2 + a3:
            n_r -= 1
            n_ri += 1
        else:
            n_ri -= 1
            n_r += 1
        t = t_next
        pos += 2

    if samples:
        out[k0:k] = samples
    state[0], state[1], state[2] = n_rm, n_ri, n_r
    return t, k, pos
