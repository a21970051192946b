"""Pure numpy/Python versions of the compiled kernels (same signatures, same results)."""
import math

import numpy as np

W_ZERO = 0
W_BILINEAR = 1
W_GRADIENT = 2
W_BIQUADRATIC = 3

SAMPLER_GRID = 4096
COARSE_GRID = 256
LOG_CUTOFF = 45.0


def bfs(indptr, indices, src):
    n = indptr.size - 1
    dist = np.full(n, -1, np.int64)
    dist[src] = 0
    frontier = np.array([src], dtype=np.int64)
    level = 0
    while frontier.size:
        level += 1
        starts, stops = indptr[frontier], indptr[frontier + 1]
        lengths = stops - starts
        if lengths.sum() == 0:
            break
        offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths)
        nbrs = indices[offsets + np.arange(lengths.sum())]
        nbrs = np.unique(nbrs[dist[nbrs] < 0])
        dist[nbrs] = level
        frontier = nbrs
    return dist


def path_census(indptr, indices, deg, src, nmax, budget):
    counts = np.zeros(nmax + 1, np.int64)
    maxprod = np.zeros(nmax + 1)
    counts[0] = 1
    maxprod[0] = 1.0
    if nmax == 0:
        return counts, maxprod, 0, True
    on_path = np.zeros(indptr.size - 1, dtype=bool)
    on_path[src] = True
    expansions = 0

    # explicit stack of (vertex, next neighbour pointer, product excluding vertex)
    stack = [[src, indptr[src], 1.0]]
    while stack:
        frame = stack[-1]
        v, p, prod = frame
        if len(stack) - 1 == nmax or p == indptr[v + 1]:
            on_path[v] = False
            stack.pop()
            continue
        frame[1] = p + 1
        w = indices[p]
        if on_path[w]:
            continue
        expansions += 1
        if expansions > budget:
            return counts, maxprod, expansions, False
        on_path[w] = True
        nprod = prod * deg[v]
        stack.append([w, indptr[w], nprod])
        depth = len(stack) - 1
        counts[depth] += 1
        if nprod > maxprod[depth]:
            maxprod[depth] = nprod
    return counts, maxprod, expansions, True


def growth_scan(indptr, indices, deg, sources, cap, theta, a):
    m = sources.size
    ecc = np.zeros(m, np.int64)
    n_x = np.zeros(m, np.int64)
    violations = np.zeros(m, np.int64)
    rate = np.full(m, -np.inf)
    wdeg = deg.astype(float) ** (1.0 + theta)
    for i, src in enumerate(sources):
        dist = bfs(indptr, indices, src)
        e = int(dist.max())
        sph_sum = np.bincount(dist, weights=wdeg, minlength=e + 1)
        sph_max = np.zeros(e + 1, np.int64)
        np.maximum.at(sph_max, dist, deg)
        ecc[i] = e
        ball = np.maximum.accumulate(sph_max)
        bad = np.nonzero(ball[1:] > cap[1 : e + 1])[0]
        n_x[i] = (bad[-1] + 1 if bad.size else 0) + 1
        if e >= 1:
            radii = np.arange(1, e + 1)
            lg = np.log(sph_sum[1:])
            rate[i] = np.max(lg / radii)
            violations[i] = np.count_nonzero((radii >= n_x[i]) & (lg > a * radii))
    return ecc, n_x, violations, rate


def _site_logdens(kind, J, vcoef, u, n_nb, s1, s2):
    out = -np.polynomial.polynomial.polyval(u, vcoef)
    if kind == W_BILINEAR:
        out = out - J * u * s1
    elif kind == W_GRADIENT:
        out = out - 0.5 * J * (n_nb * u * u - 2.0 * u * s1 + s2)
    elif kind == W_BIQUADRATIC:
        out = out - J * u * u * s2
    return out


def _bracket(kind, J, vcoef, env, n_nb, s1, s2, sr):
    i_w, j_w, r, a_v, c_v, q = env
    const = c_v + n_nb * 0.5 * i_w + 0.5 * j_w * sr
    amp = 0.5 * j_w * n_nb
    ref = float(_site_logdens(kind, J, vcoef, 0.0, n_nb, s1, s2))
    t = 1.0
    if amp > 0.0:
        t = max(t, (amp * r / (a_v * q)) ** (1.0 / (q - r)))
    for _ in range(400):
        if const + amp * t**r - a_v * t**q <= ref - LOG_CUTOFF:
            break
        t *= 1.25
    return t


def _draw(kind, J, vcoef, env, n_nb, s1, s2, sr, uniform):
    t = _bracket(kind, J, vcoef, env, n_nb, s1, s2, sr)
    h = 2.0 * t / (COARSE_GRID - 1)
    coarse = _site_logdens(kind, J, vcoef, -t + np.arange(COARSE_GRID) * h, n_nb, s1, s2)
    keep = np.nonzero(coarse >= coarse.max() - LOG_CUTOFF)[0]
    lo = max(keep[0] - 1, 0)
    hi = min(keep[-1] + 1, COARSE_GRID - 1)
    a = -t + lo * h
    b = -t + hi * h
    hf = (b - a) / (SAMPLER_GRID - 1)
    grid = a + np.arange(SAMPLER_GRID) * hf
    logd = _site_logdens(kind, J, vcoef, grid, n_nb, s1, s2)
    logd = logd - logd.max()
    l0, l1 = logd[:-1], logd[1:]
    d = l1 - l0
    flat = np.abs(d) < 1e-10
    seg = np.where(flat, hf * np.exp(0.5 * (l0 + l1)),
                   hf * (np.exp(l1) - np.exp(l0)) / np.where(flat, 1.0, d))
    mass = np.cumsum(seg)
    target = uniform * mass[-1]
    k = min(int(np.searchsorted(mass, target, side="left")), SAMPLER_GRID - 2)
    rem = target - (mass[k - 1] if k > 0 else 0.0)
    slope = (logd[k + 1] - logd[k]) / hf
    f0 = math.exp(logd[k])
    if abs(slope * hf) < 1e-10:
        step = rem / f0
    else:
        arg = 1.0 + slope * rem / f0
        step = hf if arg <= 0.0 else math.log(arg) / slope
    return grid[k] + min(max(step, 0.0), hf)


def sample_site(kind, J, vcoef, env, nb_values, uniform):
    nb = np.asarray(nb_values, dtype=float)
    return _draw(kind, J, vcoef, env, nb.size, nb.sum(), (nb * nb).sum(),
                 (np.abs(nb) ** env[2]).sum(), uniform)


def heat_bath(indptr, indices, kind, J, vcoef, env, omega, sites, uniforms,
              volume, weights, p, trace, norms):
    r = env[2]
    for s in range(uniforms.shape[0]):
        for i, x in enumerate(sites[s]):
            nb = omega[indices[indptr[x] : indptr[x + 1]]]
            omega[x] = _draw(kind, J, vcoef, env, nb.size, nb.sum(), (nb * nb).sum(),
                             (np.abs(nb) ** r).sum(), uniforms[s, i])
        trace[s] = omega[volume]
        norms[s] = np.sum(np.abs(omega) ** p * weights)
