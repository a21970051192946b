"""Compiled inner loops. Every function here has a twin in ``_numpy_kernels``."""
import math

import numpy as np
from numba import njit

# pair-potential kinds understood by the kernels
W_ZERO = 0
W_BILINEAR = 1
W_GRADIENT = 2
W_BIQUADRATIC = 3

SAMPLER_GRID = 4096
COARSE_GRID = 256
LOG_CUTOFF = 45.0


@njit(cache=True)
def bfs(indptr, indices, src):
    n = indptr.size - 1
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    dist[src] = 0
    queue[0] = src
    head, tail = 0, 1
    while head < tail:
        v = queue[head]
        head += 1
        dv = dist[v] + 1
        for p in range(indptr[v], indptr[v + 1]):
            w = indices[p]
            if dist[w] < 0:
                dist[w] = dv
                queue[tail] = w
                tail += 1
    return dist


@njit(cache=True)
def path_census(indptr, indices, deg, src, nmax, budget):
    n = indptr.size - 1
    counts = np.zeros(nmax + 1, np.int64)
    maxprod = np.zeros(nmax + 1)
    counts[0] = 1
    maxprod[0] = 1.0
    if nmax == 0:
        return counts, maxprod, 0, True
    on_path = np.zeros(n, np.bool_)
    stack_v = np.empty(nmax + 1, np.int64)
    stack_p = np.empty(nmax + 1, np.int64)
    prod = np.empty(nmax + 1)
    depth = 0
    stack_v[0] = src
    stack_p[0] = indptr[src]
    prod[0] = 1.0
    on_path[src] = True
    expansions = 0
    while depth >= 0:
        v = stack_v[depth]
        p = stack_p[depth]
        if depth == nmax or p == indptr[v + 1]:
            on_path[v] = False
            depth -= 1
            continue
        stack_p[depth] = p + 1
        w = indices[p]
        if on_path[w]:
            continue
        expansions += 1
        if expansions > budget:
            return counts, maxprod, expansions, False
        depth += 1
        stack_v[depth] = w
        stack_p[depth] = indptr[w]
        on_path[w] = True
        # degrees of every path vertex except the newest endpoint
        prod[depth] = prod[depth - 1] * deg[v]
        counts[depth] += 1
        if prod[depth] > maxprod[depth]:
            maxprod[depth] = prod[depth]
    return counts, maxprod, expansions, True


@njit(cache=True)
def growth_scan(indptr, indices, deg, sources, cap, theta, a):
    """Per source: eccentricity, first radius of the degree bound, Jlm violations, max log G/N."""
    m = sources.size
    ecc = np.zeros(m, np.int64)
    n_x = np.zeros(m, np.int64)
    violations = np.zeros(m, np.int64)
    rate = np.full(m, -np.inf)
    n = indptr.size - 1
    wdeg = np.empty(n)
    for v in range(n):
        wdeg[v] = deg[v] ** (1.0 + theta)
    sph_max = np.zeros(n + 1, np.int64)
    sph_sum = np.zeros(n + 1)
    for i in range(m):
        dist = bfs(indptr, indices, sources[i])
        e = 0
        for v in range(n):
            if dist[v] > e:
                e = dist[v]
        sph_max[: e + 1] = 0
        sph_sum[: e + 1] = 0.0
        for v in range(n):
            d = dist[v]
            sph_sum[d] += wdeg[v]
            if deg[v] > sph_max[d]:
                sph_max[d] = deg[v]
        ecc[i] = e
        # ball maxima, then the last radius in [1, e] that breaks the bound
        ball = sph_max[0]
        last_bad = 0
        for r in range(1, e + 1):
            if sph_max[r] > ball:
                ball = sph_max[r]
            if ball > cap[r]:
                last_bad = r
        n_x[i] = last_bad + 1
        for r in range(1, e + 1):
            lg = math.log(sph_sum[r])
            if lg / r > rate[i]:
                rate[i] = lg / r
            if r >= n_x[i] and lg > a * r:
                violations[i] += 1
    return ecc, n_x, violations, rate


@njit(cache=True)
def _poly(coeffs, u):
    acc = 0.0
    for k in range(coeffs.size - 1, -1, -1):
        acc = acc * u + coeffs[k]
    return acc


@njit(cache=True)
def _pair_logterm(kind, J, u, n_nb, s1, s2):
    if kind == W_BILINEAR:
        return -J * u * s1
    if kind == W_GRADIENT:
        return -0.5 * J * (n_nb * u * u - 2.0 * u * s1 + s2)
    if kind == W_BIQUADRATIC:
        return -J * u * u * s2
    return 0.0


@njit(cache=True)
def _site_logdens(kind, J, vcoef, u, n_nb, s1, s2):
    return -_poly(vcoef, u) + _pair_logterm(kind, J, u, n_nb, s1, s2)


@njit(cache=True)
def _bracket(kind, J, vcoef, env, n_nb, s1, s2, sr):
    # env = (I_W, J_W, r, a_V, c_V, q); sr = sum over neighbours of |xi|^r
    i_w, j_w, r, a_v, c_v, q = env[0], env[1], env[2], env[3], env[4], env[5]
    const = c_v + n_nb * 0.5 * i_w + 0.5 * j_w * sr
    amp = 0.5 * j_w * n_nb
    ref = _site_logdens(kind, J, vcoef, 0.0, n_nb, s1, s2)
    t = 1.0
    if amp > 0.0:
        t0 = (amp * r / (a_v * q)) ** (1.0 / (q - r))
        if t0 > t:
            t = t0
    for _ in range(400):
        if const + amp * t ** r - a_v * t ** q <= ref - LOG_CUTOFF:
            break
        t *= 1.25
    return t


@njit(cache=True)
def _draw(kind, J, vcoef, env, n_nb, s1, s2, sr, uniform, grid, logd, mass):
    t = _bracket(kind, J, vcoef, env, n_nb, s1, s2, sr)
    # coarse pass to locate the bulk
    nc = COARSE_GRID
    h = 2.0 * t / (nc - 1)
    top = -np.inf
    for k in range(nc):
        logd[k] = _site_logdens(kind, J, vcoef, -t + k * h, n_nb, s1, s2)
        if logd[k] > top:
            top = logd[k]
    lo = nc - 1
    hi = 0
    for k in range(nc):
        if logd[k] >= top - LOG_CUTOFF:
            if k < lo:
                lo = k
            hi = k
    lo = max(lo - 1, 0)
    hi = min(hi + 1, nc - 1)
    a = -t + lo * h
    b = -t + hi * h
    # fine tabulation with a log-linear interpolant of the density
    g = grid.size
    hf = (b - a) / (g - 1)
    top = -np.inf
    for k in range(g):
        grid[k] = a + k * hf
        logd[k] = _site_logdens(kind, J, vcoef, grid[k], n_nb, s1, s2)
        if logd[k] > top:
            top = logd[k]
    total = 0.0
    for k in range(g - 1):
        l0 = logd[k] - top
        l1 = logd[k + 1] - top
        d = l1 - l0
        if abs(d) < 1e-10:
            seg = hf * math.exp(0.5 * (l0 + l1))
        else:
            seg = hf * (math.exp(l1) - math.exp(l0)) / d
        total += seg
        mass[k] = total
    target = uniform * total
    # binary search for the segment holding the target mass
    lo_i, hi_i = 0, g - 2
    while lo_i < hi_i:
        mid = (lo_i + hi_i) // 2
        if mass[mid] < target:
            lo_i = mid + 1
        else:
            hi_i = mid
    k = lo_i
    before = mass[k - 1] if k > 0 else 0.0
    rem = target - before
    l0 = logd[k] - top
    slope = (logd[k + 1] - logd[k]) / hf
    f0 = math.exp(l0)
    if abs(slope * hf) < 1e-10:
        step = rem / f0
    else:
        arg = 1.0 + slope * rem / f0
        if arg <= 0.0:
            step = hf
        else:
            step = math.log(arg) / slope
    if step < 0.0:
        step = 0.0
    elif step > hf:
        step = hf
    return grid[k] + step


@njit(cache=True)
def sample_site(kind, J, vcoef, env, nb_values, uniform):
    grid = np.empty(SAMPLER_GRID)
    logd = np.empty(SAMPLER_GRID)
    mass = np.empty(SAMPLER_GRID)
    s1 = 0.0
    s2 = 0.0
    sr = 0.0
    for j in range(nb_values.size):
        s1 += nb_values[j]
        s2 += nb_values[j] * nb_values[j]
        sr += abs(nb_values[j]) ** env[2]
    return _draw(kind, J, vcoef, env, nb_values.size, s1, s2, sr, uniform, grid, logd, mass)


@njit(cache=True)
def heat_bath(indptr, indices, kind, J, vcoef, env, omega, sites, uniforms,
              volume, weights, p, trace, norms):
    """Run ``uniforms.shape[0]`` sweeps; row s of ``sites`` is the visiting order of sweep s.

    After sweep s the spins on ``volume`` go to ``trace[s]`` and the weighted
    sum of |omega|^p over the whole graph goes to ``norms[s]``.
    """
    grid = np.empty(SAMPLER_GRID)
    logd = np.empty(SAMPLER_GRID)
    mass = np.empty(SAMPLER_GRID)
    r = env[2]
    n = omega.size
    for s in range(uniforms.shape[0]):
        for i in range(sites.shape[1]):
            x = sites[s, i]
            s1 = 0.0
            s2 = 0.0
            sr = 0.0
            for q in range(indptr[x], indptr[x + 1]):
                v = omega[indices[q]]
                s1 += v
                s2 += v * v
                sr += abs(v) ** r
            omega[x] = _draw(kind, J, vcoef, env, indptr[x + 1] - indptr[x],
                             s1, s2, sr, uniforms[s, i], grid, logd, mass)
        for i in range(volume.size):
            trace[s, i] = omega[volume[i]]
        norm = 0.0
        for v in range(n):
            norm += abs(omega[v]) ** p * weights[v]
        norms[s] = norm
