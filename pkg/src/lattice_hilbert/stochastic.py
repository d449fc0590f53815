"""Monte Carlo reconstruction of the centered transform from half-space walks.

A walk Z_t = (Y_t, X_t) runs a standard Brownian vertical coordinate started
at height y0 together with an independent unit-rate compound jump process
(fair +-1 steps) on the torus, started uniformly.  Along each path two
stochastic integrals accumulate against the harmonic extension u of a
mean-zero signal f:

    M: the value process u(Z_t)  (a martingale; u is harmonic), and
    N: the conjugate-gradient transform
       sum dy_u(left) dX  -  sum dx0_u(left) dY.

Binning N at the first hit of the boundary by hitting site reconstructs the
centered discrete Hilbert transform of f.

Engineering notes, all load-bearing:

* The vertical motion reflects at y_reflect = reflect_mult * y0.  Killed
  Brownian motion from y0 has expected occupation density 2 min(y, y0) dy
  below y0 with or without the reflecting barrier, so the estimator's value
  is unchanged (up to a gradient-sized leak at the barrier, reported as
  ``reflect_bias_bound``), while the hitting-time tail becomes exponential
  instead of heavy -- without the barrier about 11% of paths would outlive
  t_cap = 50 y0^2.

* Per-path randomness is a pure function of (seed, path index): path
  buffers are drawn from SeedSequence-keyed streams -- block 0 from a bulk
  per-chunk stream (chunk = index // CHUNK_PATHS), continuation blocks from
  per-path streams -- and consumed by a sequential per-path loop.  Results
  are therefore bit-identical for any worker count or batch composition.

* Path evolution runs in a numba kernel against precomputed gradient
  tables (linear interpolation in y, exact spectral values on the grid).
  Interpolation noise enters only through zero-mean increments, so it
  perturbs variance, not the estimator's mean.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .poisson import HarmonicExtension, extend
from .signals import LatticeSignal, require_mean_zero

#: Jump intensity; fixed at 1 by the walk generator (1/2)(Lap_x + d2/dy2).
JUMP_RATE = 1.0

# Stream-defining constants: changing any of these changes every path's
# random sequence, so they are constants, not configuration.
CHUNK_PATHS = 8192
BLOCK_NORMALS = 2048
BLOCK_UNIFORMS = 3072
_MAX_JUMPS_PER_STEP = 64
_MARGIN_N = _MAX_JUMPS_PER_STEP + 2
_MARGIN_U = 2 * _MAX_JUMPS_PER_STEP + 2

# path status codes
_FRESH, _RUNNING, _HIT, _CAPPED, _ABORTED, _NEED_N, _NEED_U = 6, 0, 1, 2, 3, 4, 5


@dataclass(frozen=True)
class WalkConfig:
    """Configuration of the background walk and its estimator runs.

    ``h0`` is the base time step: uniform-step runs (``step_mode='uniform'``,
    the convergence-study mode) advance by exactly h0, while adaptive runs
    use dt = clamp((alpha y)^2, dt_min, dt_max) with dt_min defaulting to
    h0/10 so the base step still anchors the near-boundary resolution.
    """

    n: int
    paths: int
    y0: float
    h0: float = 1e-3
    alpha: float = 0.1
    dt_min: float | None = None
    dt_max: float = 1.0
    t_cap: float | None = None
    seed: int = 0
    workers: int = 1
    reflect_mult: float = 2.0
    step_mode: str = "adaptive"
    table_dy: float = 1e-3

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("torus size must be >= 2")
        if self.paths < 1:
            raise ValueError("need at least one path")
        if self.y0 <= 0:
            raise ValueError("start height y0 must be positive")
        if self.h0 <= 0:
            raise ValueError("base step h0 must be positive")
        if not (0 < self.dt_min_value <= self.h0 <= self.dt_max):
            raise ValueError("need 0 < dt_min <= h0 <= dt_max")
        if self.t_cap_value <= 0:
            raise ValueError("t_cap must be positive")
        if self.step_mode not in ("adaptive", "uniform"):
            raise ValueError("step_mode must be 'adaptive' or 'uniform'")
        if self.step_mode == "adaptive" and self.alpha <= 0:
            raise ValueError("adaptive stepping needs alpha > 0")
        if self.reflect_mult <= 1.0:
            raise ValueError("reflect_mult must exceed 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.table_dy <= 0:
            raise ValueError("table_dy must be positive")

    @property
    def dt_min_value(self) -> float:
        return self.h0 / 10.0 if self.dt_min is None else self.dt_min

    @property
    def t_cap_value(self) -> float:
        return 50.0 * self.y0 * self.y0 if self.t_cap is None else self.t_cap

    @property
    def y_reflect(self) -> float:
        return self.reflect_mult * self.y0


@dataclass(frozen=True)
class PathRecord:
    """One realization of the walk with its accumulated functionals."""

    index: int
    x_end: int
    hit: bool
    capped: bool
    n_final: float
    m_final: float
    m_initial: float
    realized_qcov_mn: float
    n_jumps: int
    sim_time: float


@dataclass(frozen=True)
class McEstimate:
    """Binned conditional-expectation estimate of the centered transform."""

    n: int
    total_paths: int
    counts: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    std_errors: np.ndarray
    capped: int
    aborted: int
    jumps_total: int
    time_total: float
    martingale_mean: float
    martingale_se: float
    qcov_mean: float
    qcov_se: float
    y0_bias_bound: float
    reflect_bias_bound: float
    wall_ms: float

    @property
    def capped_fraction(self) -> float:
        return self.capped / self.total_paths

    @property
    def jump_rate(self) -> float:
        return self.jumps_total / self.time_total

    @property
    def jump_rate_se(self) -> float:
        return math.sqrt(self.jumps_total) / self.time_total


# ---------------------------------------------------------------------------
# the path kernel


@njit(cache=True)
def _step_y(yp, delta, z, y_reflect):
    """One Brownian sub-increment with barrier fold and crossing detection.

    Returns (y_new, applied_increment, time_consumed, crossed)."""
    dy = z * math.sqrt(delta)
    yt = yp + dy
    if yt > y_reflect:
        yt = 2.0 * y_reflect - yt
    if yt <= 0.0:
        return 0.0, -yp, delta * (yp / (yp - yt)), True
    return yt, yt - yp, delta, False


@njit(cache=True)
def _lerp(table, x, y, inv_dy):
    g = y * inv_dy
    i = int(g)
    hi = table.shape[1] - 2
    if i > hi:
        i = hi
    fr = g - i
    return table[x, i] + fr * (table[x, i + 1] - table[x, i])


@njit(cache=True)
def _advance(x, y, t, nacc, qcov, m0, njumps, status,
             ncur, ucur, norms, unifs,
             tu, tdy, td0, tlap, tgu, tgdy,
             f_bound, inv_dy,
             y0, alpha2, dt_min, dt_max, h0, uniform_mode,
             y_reflect, t_cap, n_sites,
             collect_res, collect_cov,
             res_acc, cov_direct, cov_formula,
             nm_direct, nm_forward, nm_backward,
             x_end, n_final, m_final, sim_time,
             times_scratch, signs_scratch):
    rows = x.shape[0]
    ln = norms.shape[1]
    lu = unifs.shape[1]
    for p in range(rows):
        st = status[p]
        if st != _RUNNING and st != _FRESH:
            continue
        nc = ncur[p]
        uc = ucur[p]
        if st == _FRESH:
            # fresh rows always arrive with full buffers (cursors at 0)
            u0 = unifs[p, uc]
            uc += 1
            x[p] = int(u0 * n_sites)
            y[p] = y0
            m0[p] = _lerp(tu, x[p], y0, inv_dy)
            st = _RUNNING
        xp = x[p]
        yp = y[p]
        tp = t[p]
        nac = nacc[p]
        qc = qcov[p]
        nj = njumps[p]
        ra = res_acc[p]
        cd = cov_direct[p]
        cf = cov_formula[p]
        nd = nm_direct[p]
        nf = nm_forward[p]
        nb = nm_backward[p]
        while True:
            if nc > ln - _MARGIN_N:
                st = _NEED_N
                break
            if uc > lu - _MARGIN_U:
                st = _NEED_U
                break
            if uniform_mode:
                dt = h0
            else:
                dt = alpha2 * yp * yp
                if dt < dt_min:
                    dt = dt_min
                elif dt > dt_max:
                    dt = dt_max
            u1 = unifs[p, uc]
            uc += 1
            # Poisson(dt) by inversion from a single uniform
            pk = math.exp(-dt)
            ck = pk
            nj_step = 0
            while u1 > ck and nj_step < _MAX_JUMPS_PER_STEP:
                nj_step += 1
                pk *= dt / nj_step
                ck += pk
            crossed = False
            if nj_step == 0:
                z = norms[p, nc]
                nc += 1
                ynew, dy_eff, used, crossed = _step_y(yp, dt, z, y_reflect)
                d0u = _lerp(td0, xp, yp, inv_dy)
                dyu = _lerp(tdy, xp, yp, inv_dy)
                nac -= d0u * dy_eff
                qc += (dyu * dy_eff) * (-d0u * dy_eff)
                if collect_res:
                    ra += dyu * dy_eff - 0.5 * _lerp(tlap, xp, yp, inv_dy) * used
                if collect_cov:
                    dmf = _lerp(tu, xp, ynew, inv_dy) - _lerp(tu, xp, yp, inv_dy)
                    dmg = _lerp(tgu, xp, ynew, inv_dy) - _lerp(tgu, xp, yp, inv_dy)
                    cd += dmf * dmg
                    cf += dyu * _lerp(tgdy, xp, yp, inv_dy) * used
                    nd += (-d0u * dy_eff) * dmg
                    gdt = d0u * _lerp(tgdy, xp, yp, inv_dy) * used
                    nf -= gdt
                    nb -= gdt
                yp = ynew
                tp += used
            else:
                # jump times by uniform order statistics, then fair signs
                for j in range(nj_step):
                    times_scratch[j] = unifs[p, uc] * dt
                    uc += 1
                for j in range(nj_step):
                    signs_scratch[j] = 1 if unifs[p, uc] < 0.5 else -1
                    uc += 1
                for j in range(1, nj_step):
                    key = times_scratch[j]
                    i = j - 1
                    while i >= 0 and times_scratch[i] > key:
                        times_scratch[i + 1] = times_scratch[i]
                        i -= 1
                    times_scratch[i + 1] = key
                prev = 0.0
                for j in range(nj_step + 1):
                    sub = (times_scratch[j] if j < nj_step else dt) - prev
                    z = norms[p, nc]
                    nc += 1
                    ynew, dy_eff, used, crossed = _step_y(yp, sub, z, y_reflect)
                    d0u = _lerp(td0, xp, yp, inv_dy)
                    dyu = _lerp(tdy, xp, yp, inv_dy)
                    nac -= d0u * dy_eff
                    qc += (dyu * dy_eff) * (-d0u * dy_eff)
                    if collect_res:
                        ra += dyu * dy_eff - 0.5 * _lerp(tlap, xp, yp, inv_dy) * used
                    if collect_cov:
                        dmf = _lerp(tu, xp, ynew, inv_dy) - _lerp(tu, xp, yp, inv_dy)
                        dmg = _lerp(tgu, xp, ynew, inv_dy) - _lerp(tgu, xp, yp, inv_dy)
                        cd += dmf * dmg
                        cf += dyu * _lerp(tgdy, xp, yp, inv_dy) * used
                        nd += (-d0u * dy_eff) * dmg
                        gdt = d0u * _lerp(tgdy, xp, yp, inv_dy) * used
                        nf -= gdt
                        nb -= gdt
                    yp = ynew
                    tp += used
                    if crossed or j >= nj_step:
                        break
                    # apply one jump at its own left limit
                    eps = signs_scratch[j]
                    xq = xp + eps
                    if xq < 0:
                        xq += n_sites
                    elif xq >= n_sites:
                        xq -= n_sites
                    dyu = _lerp(tdy, xp, yp, inv_dy)
                    u_here = _lerp(tu, xp, yp, inv_dy)
                    u_there = _lerp(tu, xq, yp, inv_dy)
                    dn_jump = dyu * eps
                    dm_jump = u_there - u_here
                    nac += dn_jump
                    qc += dm_jump * dn_jump
                    if collect_res:
                        ra += _lerp(td0, xp, yp, inv_dy) * eps \
                            + 0.5 * _lerp(tlap, xp, yp, inv_dy)
                    if collect_cov:
                        xr = xp + 1
                        if xr >= n_sites:
                            xr -= n_sites
                        xl = xp - 1
                        if xl < 0:
                            xl += n_sites
                        fwd_f = _lerp(tu, xr, yp, inv_dy) - u_here
                        bwd_f = u_here - _lerp(tu, xl, yp, inv_dy)
                        ug_here = _lerp(tgu, xp, yp, inv_dy)
                        fwd_g = _lerp(tgu, xr, yp, inv_dy) - ug_here
                        bwd_g = ug_here - _lerp(tgu, xl, yp, inv_dy)
                        dmg_jump = _lerp(tgu, xq, yp, inv_dy) - ug_here
                        cd += dm_jump * dmg_jump
                        nd += dn_jump * dmg_jump
                        if eps > 0:
                            cf += fwd_f * fwd_g
                            nf += dyu * fwd_g
                        else:
                            cf += bwd_f * bwd_g
                            nf += dyu * bwd_g
                        nb += dyu * bwd_g
                    xp = xq
                    nj += 1
                    prev = times_scratch[j]
            if crossed:
                st = _HIT
                break
            if tp >= t_cap:
                st = _CAPPED
                break
        # persist state
        x[p] = xp
        y[p] = yp
        t[p] = tp
        nacc[p] = nac
        qcov[p] = qc
        njumps[p] = nj
        ncur[p] = nc
        ucur[p] = uc
        res_acc[p] = ra
        cov_direct[p] = cd
        cov_formula[p] = cf
        nm_direct[p] = nd
        nm_forward[p] = nf
        nm_backward[p] = nb
        if st == _HIT or st == _CAPPED:
            if not (math.isfinite(nac) and math.isfinite(yp) and math.isfinite(qc)):
                st = _ABORTED
        if st == _HIT:
            x_end[p] = xp
            n_final[p] = nac
            m_final[p] = f_bound[xp]
            sim_time[p] = tp
        elif st == _CAPPED or st == _ABORTED:
            x_end[p] = xp
            n_final[p] = nac
            m_final[p] = _lerp(tu, xp, yp, inv_dy)
            sim_time[p] = tp
        status[p] = st


# ---------------------------------------------------------------------------
# engine


def _stream(seed: int, key: tuple) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return np.random.Generator(np.random.SFC64(ss))


class _WalkEngine:
    """Chunked driver for the path kernel; owns tables and randomness."""

    def __init__(self, cfg: WalkConfig, ext: HarmonicExtension,
                 ext_g: HarmonicExtension | None = None,
                 collect_res: bool = False, collect_cov: bool = False):
        require_mean_zero(ext.base, "walk signal")
        if ext.n != cfg.n:
            raise ValueError("config torus size does not match the signal")
        if ext_g is not None and ext_g.n != cfg.n:
            raise ValueError("second signal lives on a different torus")
        self.cfg = cfg
        self.collect_res = collect_res
        self.collect_cov = collect_cov
        self.f_bound = ext.base.values.copy()

        dy = cfg.table_dy
        y_max = cfg.y_reflect
        grid = np.arange(0.0, y_max + 2.0 * dy, dy)
        self.inv_dy = 1.0 / dy

        n = cfg.n
        theta = 2.0 * np.pi * np.arange(n) / n

        def tables_for(e: HarmonicExtension):
            damp = np.exp(-np.outer(grid, e.decay)) * e.coeffs
            tu = np.fft.ifft(damp, axis=1).real.T
            tdy = np.fft.ifft(damp * (-e.decay), axis=1).real.T
            td0 = np.fft.ifft(damp * (1j * np.sin(theta)), axis=1).real.T
            tlap = np.fft.ifft(damp * (-e.decay ** 2), axis=1).real.T
            return (np.ascontiguousarray(tu), np.ascontiguousarray(tdy),
                    np.ascontiguousarray(td0), np.ascontiguousarray(tlap))

        self.tu, self.tdy, self.td0, self.tlap = tables_for(ext)
        if ext_g is not None:
            self.tgu, self.tgdy, _, _ = tables_for(ext_g)
        else:
            self.tgu, self.tgdy = self.tu, self.tdy

    def run(self, lo: int, hi: int) -> dict:
        """Simulate global path indices [lo, hi); per-path outputs."""
        cfg = self.cfg
        count = hi - lo
        out = {
            "status": np.zeros(count, np.int8),
            "x_end": np.zeros(count, np.int64),
            "n_final": np.zeros(count),
            "m_final": np.zeros(count),
            "m_initial": np.zeros(count),
            "qcov": np.zeros(count),
            "n_jumps": np.zeros(count, np.int64),
            "sim_time": np.zeros(count),
            "res_acc": np.zeros(count),
            "cov_direct": np.zeros(count),
            "cov_formula": np.zeros(count),
            "nm_direct": np.zeros(count),
            "nm_forward": np.zeros(count),
            "nm_backward": np.zeros(count),
        }
        first_chunk = lo // CHUNK_PATHS
        last_chunk = (hi - 1) // CHUNK_PATHS
        for chunk in range(first_chunk, last_chunk + 1):
            self._run_chunk(chunk, lo, hi, out)
        return out

    def _run_chunk(self, chunk: int, lo: int, hi: int, out: dict) -> None:
        cfg = self.cfg
        base = chunk * CHUNK_PATHS
        rows = np.arange(CHUNK_PATHS)
        active = (base + rows >= lo) & (base + rows < hi)

        g0 = _stream(cfg.seed, (0, chunk))
        norms = g0.standard_normal((CHUNK_PATHS, BLOCK_NORMALS))
        unifs = g0.random((CHUNK_PATHS, BLOCK_UNIFORMS))

        x = np.zeros(CHUNK_PATHS, np.int64)
        y = np.zeros(CHUNK_PATHS)
        t = np.zeros(CHUNK_PATHS)
        nacc = np.zeros(CHUNK_PATHS)
        qcov = np.zeros(CHUNK_PATHS)
        m0 = np.zeros(CHUNK_PATHS)
        njumps = np.zeros(CHUNK_PATHS, np.int64)
        status = np.where(active, _FRESH, _HIT).astype(np.int8)
        nblk = np.zeros(CHUNK_PATHS, np.int64)
        ublk = np.zeros(CHUNK_PATHS, np.int64)
        ncur = np.zeros(CHUNK_PATHS, np.int64)
        ucur = np.zeros(CHUNK_PATHS, np.int64)
        res_acc = np.zeros(CHUNK_PATHS)
        cov_direct = np.zeros(CHUNK_PATHS)
        cov_formula = np.zeros(CHUNK_PATHS)
        nm_direct = np.zeros(CHUNK_PATHS)
        nm_forward = np.zeros(CHUNK_PATHS)
        nm_backward = np.zeros(CHUNK_PATHS)
        x_end = np.zeros(CHUNK_PATHS, np.int64)
        n_final = np.zeros(CHUNK_PATHS)
        m_final = np.zeros(CHUNK_PATHS)
        sim_time = np.zeros(CHUNK_PATHS)
        times_scratch = np.zeros(_MAX_JUMPS_PER_STEP + 1)
        signs_scratch = np.zeros(_MAX_JUMPS_PER_STEP + 1, np.int64)

        if not active.any():
            return
        # inactive rows are parked as HIT so the kernel skips them; they are
        # never copied into the outputs
        mask_done = np.isin(status, (_HIT, _CAPPED, _ABORTED))
        while not mask_done.all():
            _advance(x, y, t, nacc, qcov, m0, njumps, status,
                     ncur, ucur, norms, unifs,
                     self.tu, self.tdy, self.td0, self.tlap,
                     self.tgu, self.tgdy,
                     self.f_bound, self.inv_dy,
                     cfg.y0, cfg.alpha * cfg.alpha, cfg.dt_min_value,
                     cfg.dt_max, cfg.h0, cfg.step_mode == "uniform",
                     cfg.y_reflect, cfg.t_cap_value, cfg.n,
                     self.collect_res, self.collect_cov,
                     res_acc, cov_direct, cov_formula,
                     nm_direct, nm_forward, nm_backward,
                     x_end, n_final, m_final, sim_time,
                     times_scratch, signs_scratch)
            for p in np.nonzero(status == _NEED_N)[0]:
                nblk[p] += 1
                gp = _stream(cfg.seed, (1, base + int(p), int(nblk[p])))
                norms[p, :] = gp.standard_normal(BLOCK_NORMALS)
                ncur[p] = 0
                status[p] = _RUNNING
            for p in np.nonzero(status == _NEED_U)[0]:
                ublk[p] += 1
                gp = _stream(cfg.seed, (2, base + int(p), int(ublk[p])))
                unifs[p, :] = gp.random(BLOCK_UNIFORMS)
                ucur[p] = 0
                status[p] = _RUNNING
            mask_done = np.isin(status, (_HIT, _CAPPED, _ABORTED))

        sel = np.nonzero(active)[0]
        dst = base + sel - lo
        out["status"][dst] = status[sel]
        out["x_end"][dst] = x_end[sel]
        out["n_final"][dst] = n_final[sel]
        out["m_final"][dst] = m_final[sel]
        out["m_initial"][dst] = m0[sel]
        out["qcov"][dst] = qcov[sel]
        out["n_jumps"][dst] = njumps[sel]
        out["sim_time"][dst] = sim_time[sel]
        out["res_acc"][dst] = res_acc[sel]
        out["cov_direct"][dst] = cov_direct[sel]
        out["cov_formula"][dst] = cov_formula[sel]
        out["nm_direct"][dst] = nm_direct[sel]
        out["nm_forward"][dst] = nm_forward[sel]
        out["nm_backward"][dst] = nm_backward[sel]


def _run_task(args):
    (cfg, f_vals, g_vals, collect_res, collect_cov, lo, hi) = args
    f = LatticeSignal.torus(f_vals)
    ext = extend(f)
    ext_g = extend(LatticeSignal.torus(g_vals)) if g_vals is not None else None
    eng = _WalkEngine(cfg, ext, ext_g, collect_res, collect_cov)
    return lo, eng.run(lo, hi)


def _simulate_all(cfg: WalkConfig, f: LatticeSignal,
                  g: LatticeSignal | None = None,
                  collect_res: bool = False,
                  collect_cov: bool = False) -> dict:
    """Run all cfg.paths paths; merge per-path arrays in index order."""
    g_vals = g.values if g is not None else None
    if cfg.workers == 1:
        _, out = _run_task((cfg, f.values, g_vals, collect_res, collect_cov,
                            0, cfg.paths))
        return out
    import multiprocessing as mp

    # worker boundaries aligned to RNG chunks: results are identical for any
    # worker count (per-path streams are scheduling-independent)
    n_chunks = (cfg.paths + CHUNK_PATHS - 1) // CHUNK_PATHS
    bounds = []
    per = max(1, n_chunks // cfg.workers)
    start = 0
    while start < cfg.paths:
        stop = min(cfg.paths, start + per * CHUNK_PATHS)
        bounds.append((start, stop))
        start = stop
    tasks = [(cfg, f.values, g_vals, collect_res, collect_cov, lo, hi)
             for lo, hi in bounds]
    out = None
    ctx = mp.get_context("fork")
    with ctx.Pool(processes=cfg.workers) as pool:
        for lo, part in pool.imap_unordered(_run_task, tasks):
            if out is None:
                out = {k: np.zeros(cfg.paths, v.dtype) for k, v in part.items()}
            span = slice(lo, lo + len(part["status"]))
            for k, v in part.items():
                out[k][span] = v
    return out


# ---------------------------------------------------------------------------
# public operations


def simulate_path(cfg: WalkConfig, ext: HarmonicExtension, idx: int) -> PathRecord:
    """Run the single path with the given index; identical to the record the
    bulk runner produces for that index."""
    if not (0 <= idx < cfg.paths):
        raise ValueError("path index out of range")
    eng = _WalkEngine(cfg, ext)
    out = eng.run(idx, idx + 1)
    return _record(out, 0, idx)


def _record(out: dict, row: int, idx: int) -> PathRecord:
    st = int(out["status"][row])
    return PathRecord(
        index=idx,
        x_end=int(out["x_end"][row]),
        hit=st == _HIT,
        capped=st == _CAPPED,
        n_final=float(out["n_final"][row]),
        m_final=float(out["m_final"][row]),
        m_initial=float(out["m_initial"][row]),
        realized_qcov_mn=float(out["qcov"][row]),
        n_jumps=int(out["n_jumps"][row]),
        sim_time=float(out["sim_time"][row]),
    )


def _bias_bounds(cfg: WalkConfig, f: LatticeSignal) -> tuple[float, float]:
    ext = extend(f)
    a = ext.decay
    mag = np.abs(ext.coeffs)
    mask = a > 0
    theta = 2.0 * np.pi * np.arange(cfg.n) / cfg.n
    y0_bias = float(np.sum(mag[mask] * np.exp(-2.0 * a[mask] * cfg.y0)) / cfg.n)
    leak = float(np.sum(mag[mask] * (a[mask] + np.abs(np.sin(theta[mask])))
                        * np.exp(-a[mask] * cfg.y_reflect)) / cfg.n)
    return y0_bias, cfg.y0 * leak


def run_monte_carlo(cfg: WalkConfig, f: LatticeSignal) -> McEstimate:
    """Estimate the centered transform of f from cfg.paths walks.

    Non-capped paths are binned by hitting site; per-site means estimate the
    transform there.  Deterministic given (seed, paths, config); identical
    for any worker count.  Fails if more than half the paths outlive t_cap.
    """
    require_mean_zero(f, "monte carlo signal")
    t0 = time.perf_counter()
    out = _simulate_all(cfg, f)
    wall = (time.perf_counter() - t0) * 1e3

    status = out["status"]
    hit = status == _HIT
    capped = int((status == _CAPPED).sum())
    aborted = int((status == _ABORTED).sum())
    if capped > 0.5 * cfg.paths:
        raise RuntimeError(
            f"{capped}/{cfg.paths} paths exceeded t_cap={cfg.t_cap_value:g}; "
            "configuration unusable")

    xe = out["x_end"][hit]
    nf = out["n_final"][hit]
    counts = np.bincount(xe, minlength=cfg.n).astype(np.int64)
    sums = np.bincount(xe, weights=nf, minlength=cfg.n)
    sq = np.bincount(xe, weights=nf * nf, minlength=cfg.n)
    means = np.divide(sums, counts, out=np.full(cfg.n, np.nan),
                      where=counts > 0)
    var = np.full(cfg.n, np.nan)
    ok = counts > 1
    var[ok] = (sq[ok] - counts[ok] * means[ok] ** 2) / (counts[ok] - 1)
    var[ok] = np.maximum(var[ok], 0.0)
    se = np.sqrt(np.divide(var, counts, out=np.full(cfg.n, np.nan),
                           where=counts > 0))

    live = status != _ABORTED
    mart = out["m_final"][live] - out["m_initial"][live]
    qc = out["qcov"][live]
    y0_bias, refl_bias = _bias_bounds(cfg, f)
    return McEstimate(
        n=cfg.n,
        total_paths=cfg.paths,
        counts=counts,
        means=means,
        variances=var,
        std_errors=se,
        capped=capped,
        aborted=aborted,
        jumps_total=int(out["n_jumps"].sum()),
        time_total=float(out["sim_time"].sum()),
        martingale_mean=float(mart.mean()),
        martingale_se=float(mart.std(ddof=1) / math.sqrt(mart.size)),
        qcov_mean=float(qc.mean()),
        qcov_se=float(qc.std(ddof=1) / math.sqrt(qc.size)),
        y0_bias_bound=y0_bias,
        reflect_bias_bound=refl_bias,
        wall_ms=wall,
    )


def pairing_mc(cfg: WalkConfig, f: LatticeSignal,
               g: LatticeSignal) -> tuple[float, float]:
    """Monte Carlo estimate of the pairing (h f, g) via hit-site weighting.

    The start site is uniform (mass 1/n per site), so n * mean(N_T g(X_T))
    over hitting paths estimates the lattice pairing; returns (estimate,
    standard error).
    """
    require_mean_zero(f, "pairing signal f")
    require_mean_zero(g, "pairing signal g")
    if not (g.is_torus and g.n == cfg.n):
        raise ValueError("pairing test function must live on the same torus")
    out = _simulate_all(cfg, f)
    hit = out["status"] == _HIT
    vals = cfg.n * out["n_final"][hit] * g.values[out["x_end"][hit]]
    if vals.size < 2:
        raise RuntimeError("too few hitting paths for a pairing estimate")
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size))


def orthogonality_stat(cfg: WalkConfig, f: LatticeSignal) -> tuple[float, float]:
    """Mean and standard error of the realized covariation of the value
    process with its conjugate transform; statistically zero (the bracket's
    compensator vanishes) although single paths are far from zero."""
    require_mean_zero(f, "orthogonality signal")
    out = _simulate_all(cfg, f)
    live = out["status"] != _ABORTED
    qc = out["qcov"][live]
    return float(qc.mean()), float(qc.std(ddof=1) / math.sqrt(qc.size))


def covariation_formula_check(cfg: WalkConfig, f: LatticeSignal,
                              g: LatticeSignal, n_paths: int) -> dict:
    """Compare realized increment products against the pathwise covariation
    formulas, and decide the orientation of the jump term empirically.

    Per path: ``direct`` sums actual increment products of the two value
    processes; ``formula`` sums the one-sided-difference jump products plus
    the vertical-gradient product times elapsed time.  The transform-value
    bracket is accumulated three ways: realized, with the forward/backward
    difference chosen by the jump sign, and with the backward difference
    always (the rejected variant).
    """
    require_mean_zero(f, "covariation signal f")
    require_mean_zero(g, "covariation signal g")
    cfg = replace(cfg, paths=n_paths)
    out = _simulate_all(cfg, f, g, collect_cov=True)
    live = out["status"] != _ABORTED
    direct = out["cov_direct"][live]
    formula = out["cov_formula"][live]
    scale = np.maximum(np.abs(direct), 1e-12)
    rel = np.abs(direct - formula) / scale
    nm_d = out["nm_direct"][live]
    nm_f = out["nm_forward"][live]
    nm_b = out["nm_backward"][live]
    err_fwd = float(np.median(np.abs(nm_d - nm_f)))
    err_bwd = float(np.median(np.abs(nm_d - nm_b)))
    return {
        "paths": int(live.sum()),
        "median_abs_residual": float(np.median(np.abs(direct - formula))),
        "median_relative_gap": float(np.median(rel)),
        "max_relative_gap": float(rel.max()),
        "jump_term_orientation": ("sign-matched one-sided difference"
                                  if err_fwd < err_bwd else
                                  "backward difference in both slots"),
        "nm_residual_sign_matched": err_fwd,
        "nm_residual_backward_only": err_bwd,
        "per_path": {
            "direct": direct, "formula": formula,
            "nm_direct": nm_d, "nm_forward": nm_f, "nm_backward": nm_b,
            "n_jumps": out["n_jumps"][live],
        },
    }


def ito_residual_study(cfg: WalkConfig, f: LatticeSignal,
                       h_values, paths: int | None = None) -> dict:
    """Median pathwise defect of the stochastic update formula at uniform
    steps h, for each h in h_values; first-order left-point sums converge
    at rate sqrt(h), so halving h should shrink the median by about 1.4."""
    require_mean_zero(f, "residual-study signal")
    medians = []
    for h in h_values:
        c = replace(cfg, h0=float(h), dt_min=float(h) / 10.0,
                    step_mode="uniform",
                    paths=paths if paths is not None else cfg.paths)
        out = _simulate_all(c, f, collect_res=True)
        live = out["status"] != _ABORTED
        resid = np.abs(out["m_final"][live] - out["m_initial"][live]
                       - out["res_acc"][live])
        medians.append(float(np.median(resid)))
    ratios = [medians[i] / medians[i + 1] for i in range(len(medians) - 1)]
    return {"h_values": [float(h) for h in h_values],
            "medians": medians, "halving_factors": ratios}
