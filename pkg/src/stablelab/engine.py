"""Jump-adapted Euler scheme for systems dX_t = A(X_t-) dZ_t.

The drivers Z are independent one-dimensional symmetric stable processes
with per-axis indices.  Each driver is split by a size threshold: jumps
above it are applied as individual timed events with A evaluated at the
left limit, while the small-jump motion is aggregated per grid step with A
frozen at the step start (see :mod:`stablelab.drivers` for the layer
construction).  Paths are monitored at every grid point and at every
big-jump time.

Two marchers share the sampling layers.  The ensemble marcher vectorizes
across a batch of paths and applies a step's big jumps after the step's
aggregated small move (time stamps stay exact; the within-step ordering
error is part of the O(dt) discretization bias).  The single-path marcher
splits steps at the jump times exactly and backs the trajectory-level
operations.

Every path owns the counter-based stream ``path_stream(seed, path_index)``,
so ensembles are reproducible bit for bit regardless of batch size or
worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .drivers import JumpLayerPlan, StableIndexSet, path_stream
from .errors import ConfigurationError
from .geometry import AnisotropicBox

__all__ = [
    "SimulationConfig",
    "JumpMark",
    "Trajectory",
    "ExitRecord",
    "simulate_path",
    "first_exit",
    "first_hit",
    "count_transitions",
    "run_ensemble",
    "ExitProbe",
    "HitProbe",
    "FinalStateProbe",
    "resolve_threshold",
    "build_plans",
]

# Default big-jump threshold, as a fraction of the smallest halfwidth of the
# box being monitored: small enough that threshold effects sit well below
# Monte Carlo noise, large enough to keep the event stream sparse.
THRESHOLD_FRACTION = 0.1


@dataclass(frozen=True)
class SimulationConfig:
    """Scheme parameters shared by all engine entry points.

    horizon must be an integer multiple of dt (within 1e-6 relative); the
    grid is global, so ensembles advance in lockstep.  jump_threshold =
    None defers to the box rule (THRESHOLD_FRACTION * smallest halfwidth)
    where a box is available.
    """

    dt: float
    horizon: float
    jump_threshold: float | None = None
    floor: float | None = None
    chunk_steps: int = 32
    batch_size: int = 8192
    n_threads: int = 1

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.horizon <= 0.0:
            raise ConfigurationError(f"horizon must be positive, got {self.horizon}")
        if self.dt > self.horizon * (1.0 + 1e-12):
            raise ConfigurationError("dt cannot exceed the horizon")
        if self.chunk_steps < 1 or self.batch_size < 1 or self.n_threads < 1:
            raise ConfigurationError("chunk_steps, batch_size, n_threads must be >= 1")
        if self.jump_threshold is not None and self.jump_threshold <= 0.0:
            raise ConfigurationError(
                f"jump threshold must be positive, got {self.jump_threshold}")

    @property
    def n_steps(self) -> int:
        n = int(round(self.horizon / self.dt))
        if n < 1 or abs(n * self.dt - self.horizon) > 1e-6 * self.horizon:
            raise ConfigurationError(
                f"horizon {self.horizon} is not an integer multiple of dt {self.dt}")
        return n

    def scaled(self, horizon_factor: float) -> "SimulationConfig":
        """Same grid, horizon stretched by an integer-safe factor."""
        n = max(1, int(round(self.n_steps * horizon_factor)))
        return SimulationConfig(self.dt, n * self.dt, self.jump_threshold,
                                self.floor, self.chunk_steps, self.batch_size,
                                self.n_threads)


def resolve_threshold(config: SimulationConfig, box: AnisotropicBox | None = None) -> float:
    if config.jump_threshold is not None:
        return config.jump_threshold
    if box is None:
        raise ConfigurationError(
            "jump_threshold is required when no box supplies the default rule")
    return THRESHOLD_FRACTION * float(box.halfwidths.min())


def build_plans(indices: StableIndexSet, threshold: float, dt: float,
                floor: float | None = None) -> list[JumpLayerPlan]:
    return [JumpLayerPlan.build(a, threshold, dt, floor) for a in indices.alphas]


# ---------------------------------------------------------------------------
# result records


@dataclass(frozen=True)
class JumpMark:
    """One applied big jump: X_post - X_pre == size * A(X_pre)[:, axis]."""

    time: float
    axis: int
    size: float
    pre_state: np.ndarray
    post_state: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Monitored path skeleton: states at grid points and at big-jump times."""

    times: np.ndarray
    states: np.ndarray
    marks: list

    def __post_init__(self):
        if self.times.shape[0] != self.states.shape[0]:
            raise ConfigurationError("times and states lengths differ")


@dataclass(frozen=True)
class ExitRecord:
    """Outcome of first_exit / first_hit for a single path.

    exit_time is the first monitored time at which the path left the box
    (an upper-biased proxy for the true exit time, since crossings between
    monitored points go unseen).  censored means the horizon was reached
    first; exit fields are then NaN.
    """

    exit_time: float
    exit_state: np.ndarray
    pre_exit_state: np.ndarray
    censored: bool
    hit_time: float | None = None
    hit_state: np.ndarray | None = None


# ---------------------------------------------------------------------------
# ensemble probes


class ExitProbe:
    """Records first exit from an open box, per path."""

    def __init__(self, n: int, box: AnisotropicBox):
        self.box = box
        d = box.center.shape[0]
        self.exit_time = np.full(n, np.nan)
        self.exit_state = np.full((n, d), np.nan)
        self.pre_exit_state = np.full((n, d), np.nan)
        self.censored = np.zeros(n, dtype=bool)

    def before_step(self, t, X, live, dt):
        pass

    def at_point(self, t, X_prev, X_new, live):
        stop = live & ~self.box.contains(X_new)
        if np.any(stop):
            self.exit_time[stop] = t
            self.exit_state[stop] = X_new[stop]
            self.pre_exit_state[stop] = X_prev[stop]
        return stop

    def at_jump(self, t, axes, sizes, X_pre, X_post, pos):
        stop = ~self.box.contains(X_post)
        if np.any(stop):
            sel = pos[stop]
            self.exit_time[sel] = t[stop]
            self.exit_state[sel] = X_post[stop]
            self.pre_exit_state[sel] = X_pre[stop]
        return stop

    def at_horizon(self, t, X, live):
        self.censored[live] = True

    def collect(self):
        return {"exit_time": self.exit_time, "exit_state": self.exit_state,
                "pre_exit_state": self.pre_exit_state, "censored": self.censored}


class HitProbe:
    """First hit of a target versus first exit of the surrounding box."""

    def __init__(self, n: int, box: AnisotropicBox, target):
        self.box = box
        self.target = target
        d = box.center.shape[0]
        self.hit = np.zeros(n, dtype=bool)
        self.hit_time = np.full(n, np.nan)
        self.hit_state = np.full((n, d), np.nan)
        self.exit_time = np.full(n, np.nan)
        self.exit_state = np.full((n, d), np.nan)
        self.pre_exit_state = np.full((n, d), np.nan)
        self.censored = np.zeros(n, dtype=bool)

    def before_step(self, t, X, live, dt):
        pass

    def _check(self, t_arr, X_prev, X_new, sel):
        """Shared hit-first-then-exit bookkeeping; returns the stop mask."""
        hit = self.target.contains(X_new)
        out = ~self.box.contains(X_new) & ~hit
        if np.any(hit):
            idx = sel[hit]
            self.hit[idx] = True
            self.hit_time[idx] = t_arr[hit]
            self.hit_state[idx] = X_new[hit]
        if np.any(out):
            idx = sel[out]
            self.exit_time[idx] = t_arr[out]
            self.exit_state[idx] = X_new[out]
            self.pre_exit_state[idx] = X_prev[out]
        return hit | out

    def at_point(self, t, X_prev, X_new, live):
        sel = np.flatnonzero(live)
        if sel.size == 0:
            return None
        t_arr = np.full(sel.size, t)
        stop_sub = self._check(t_arr, X_prev[sel], X_new[sel], sel)
        stop = np.zeros(live.shape[0], dtype=bool)
        stop[sel[stop_sub]] = True
        return stop

    def at_jump(self, t, axes, sizes, X_pre, X_post, pos):
        return self._check(t, X_pre, X_post, pos)

    def at_horizon(self, t, X, live):
        self.censored[live] = True

    def collect(self):
        return {"hit": self.hit, "hit_time": self.hit_time,
                "hit_state": self.hit_state, "exit_time": self.exit_time,
                "exit_state": self.exit_state,
                "pre_exit_state": self.pre_exit_state, "censored": self.censored}


class FinalStateProbe:
    """No stopping; keeps the state at the horizon (free-roam ensembles)."""

    def __init__(self, n: int, dim: int):
        self.final_state = np.full((n, dim), np.nan)

    def before_step(self, t, X, live, dt):
        pass

    def at_point(self, t, X_prev, X_new, live):
        return None

    def at_jump(self, t, axes, sizes, X_pre, X_post, pos):
        return None

    def at_horizon(self, t, X, live):
        self.final_state[live] = X[live]

    def collect(self):
        return {"final_state": self.final_state}


# ---------------------------------------------------------------------------
# batched marcher

def _sample_chunk(rngs, act, plans, csteps, dt, t0, n, d):
    """Draw one chunk of randomness for the active paths.

    Per path the draw order is frozen: one Poisson vector (big counts per
    driver, then medium counts per driver), one uniform block consumed as
    (times, magnitudes, signs) per driver for big then medium layers, and
    one normal block of shape (csteps, d).  Nothing here depends on which
    other paths are active.
    """
    T = csteps * dt
    small = np.zeros((n, csteps, d))
    lam = np.array([p.big_rate for p in plans] + [p.medium_rate for p in plans]) * T
    stds = np.array([p.gauss_std(dt) for p in plans])
    ev_path, ev_time, ev_axis, ev_size = [], [], [], []
    for i in act:
        rng = rngs[i]
        counts = rng.poisson(lam)
        nb, nm = counts[:d], counts[d:]
        u = rng.random(int(3 * (nb.sum() + nm.sum())))
        z = rng.standard_normal(csteps * d)
        off = 0
        for j in range(d):
            kj = int(nb[j])
            if kj:
                tj = u[off:off + kj] * T
                mj = plans[j].big_magnitudes(u[off + kj:off + 2 * kj])
                sj = np.where(u[off + 2 * kj:off + 3 * kj] < 0.5, -1.0, 1.0)
                off += 3 * kj
                ev_path.append(np.full(kj, i))
                ev_time.append(t0 + tj)
                ev_axis.append(np.full(kj, j))
                ev_size.append(mj * sj)
        for j in range(d):
            mjn = int(nm[j])
            if mjn:
                tj = u[off:off + mjn] * T
                mags = plans[j].medium_magnitudes(u[off + mjn:off + 2 * mjn])
                sgn = np.where(u[off + 2 * mjn:off + 3 * mjn] < 0.5, -1.0, 1.0)
                off += 3 * mjn
                ks = np.minimum((tj / dt).astype(np.int64), csteps - 1)
                small[i, :, j] += np.bincount(ks, weights=mags * sgn,
                                              minlength=csteps)
        small[i] += z.reshape(csteps, d) * stds
    if ev_path:
        epath = np.concatenate(ev_path)
        etime = np.concatenate(ev_time)
        eaxis = np.concatenate(ev_axis)
        esize = np.concatenate(ev_size)
    else:
        epath = np.empty(0, dtype=np.int64)
        etime = np.empty(0)
        eaxis = np.empty(0, dtype=np.int64)
        esize = np.empty(0)
    return small, epath, etime, eaxis, esize


def _order_events(epath, etime, eaxis, esize, t0, dt, csteps):
    """Sort events by (step, within-step rank); rank preserves per-path time order."""
    estep = np.minimum(((etime - t0) / dt).astype(np.int64), csteps - 1)
    estep = np.maximum(estep, 0)
    order = np.lexsort((etime, estep, epath))
    epath, etime, eaxis, esize, estep = (a[order] for a in
                                         (epath, etime, eaxis, esize, estep))
    m = epath.shape[0]
    idx = np.arange(m)
    new_group = np.ones(m, dtype=bool)
    if m > 1:
        new_group[1:] = (epath[1:] != epath[:-1]) | (estep[1:] != estep[:-1])
    start = np.maximum.accumulate(np.where(new_group, idx, 0))
    slot = idx - start
    order2 = np.lexsort((etime, slot, estep))
    return (epath[order2], etime[order2], eaxis[order2], esize[order2],
            estep[order2], slot[order2])


def _apply_columns(field, X_pre, axes, sizes):
    if field.constant is not None:
        cols = field.constant[:, axes].T
    else:
        mats = field.evaluate_batch(X_pre)
        cols = mats[np.arange(X_pre.shape[0]), :, axes]
    return X_pre + sizes[:, None] * cols


def _run_batch(probe, x0b, field, plans, n_steps, dt, seed, g_offset, chunk_steps):
    n, d = x0b.shape
    X = x0b.copy()
    live = np.ones(n, dtype=bool)
    stop = probe.at_point(0.0, X, X, live)
    if stop is not None:
        live &= ~stop
    rngs = [path_stream(seed, g_offset + i) for i in range(n)]

    step0 = 0
    while step0 < n_steps and live.any():
        csteps = min(chunk_steps, n_steps - step0)
        t0 = step0 * dt
        act = np.flatnonzero(live)
        small, epath, etime, eaxis, esize = _sample_chunk(
            rngs, act, plans, csteps, dt, t0, n, d)
        epath, etime, eaxis, esize, estep, eslot = _order_events(
            epath, etime, eaxis, esize, t0, dt, csteps)
        step_lo = np.searchsorted(estep, np.arange(csteps), side="left")
        step_hi = np.searchsorted(estep, np.arange(csteps), side="right")

        for k in range(csteps):
            if not live.any():
                break
            t_new = t0 + (k + 1) * dt
            probe.before_step(t0 + k * dt, X, live, dt)
            inc = small[:, k, :]
            if field.is_identity:
                dX = inc
            elif field.constant is not None:
                dX = inc @ field.constant.T
            else:
                mats = field.evaluate_batch(X)
                dX = np.einsum("nij,nj->ni", mats, inc)
            X_prev = X
            X = np.where(live[:, None], X + dX, X)
            stop = probe.at_point(t_new, X_prev, X, live)
            if stop is not None:
                live = live & ~stop

            lo, hi = step_lo[k], step_hi[k]
            while lo < hi:
                s = eslot[lo]
                cut = np.searchsorted(eslot[lo:hi], s, side="right") + lo
                sel = slice(lo, cut)
                lo = cut
                pos = epath[sel]
                ok = live[pos]
                if not np.any(ok):
                    continue
                pos = pos[ok]
                t_ev = etime[sel][ok]
                ax = eaxis[sel][ok]
                sz = esize[sel][ok]
                X_pre = X[pos]
                X_post = _apply_columns(field, X_pre, ax, sz)
                stop = probe.at_jump(t_ev, ax, sz, X_pre, X_post, pos)
                X[pos] = X_post
                if stop is not None:
                    live[pos[stop]] = False
        step0 += csteps

    probe.at_horizon(n_steps * dt, X, live)
    return probe


def run_ensemble(probe_factory, x0, field, indices, n_paths, config, seed,
                 box=None, path_offset=0):
    """March n_paths paths and merge the probe outputs in path order.

    probe_factory(n_batch) builds one probe per batch; the merged dict
    concatenates each collected array across batches.  Path i consumes the
    stream path_stream(seed, path_offset + i) whatever the batch size or
    thread count, so results are reproducible bit for bit.
    """
    if n_paths < 1:
        raise ConfigurationError(f"n_paths must be >= 1, got {n_paths}")
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1 or x0.shape[0] != indices.dim:
        raise ConfigurationError(
            f"x0 has shape {x0.shape}, expected ({indices.dim},)")
    if field.dim != indices.dim:
        raise ConfigurationError(
            f"field dimension {field.dim} does not match indices {indices.dim}")
    threshold = resolve_threshold(config, box)
    plans = build_plans(indices, threshold, config.dt, config.floor)
    n_steps = config.n_steps

    bounds = list(range(0, n_paths, config.batch_size)) + [n_paths]
    batches = [(bounds[i], bounds[i + 1] - bounds[i])
               for i in range(len(bounds) - 1)]

    def task(batch):
        start, size = batch
        probe = probe_factory(size)
        x0b = np.broadcast_to(x0, (size, x0.shape[0])).copy()
        _run_batch(probe, x0b, field, plans, n_steps, config.dt, seed,
                   path_offset + start, config.chunk_steps)
        return probe.collect()

    if config.n_threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=config.n_threads) as pool:
            parts = list(pool.map(task, batches))
    else:
        parts = [task(b) for b in batches]

    merged = {}
    for key in parts[0]:
        merged[key] = np.concatenate([p[key] for p in parts], axis=0)
    merged["threshold"] = threshold
    return merged


# ---------------------------------------------------------------------------
# exact single-path marcher

class _SingleMonitor:
    """Scalar monitoring callbacks; return True to stop the path."""

    def on_point(self, t, x_prev, x_new):
        return False

    def on_jump(self, t, axis, size, x_pre, x_post):
        return False

    def on_horizon(self, t, x):
        pass


def _run_single(x0, field, indices, config, seed, monitor, threshold):
    """March one path on the exact jump-adapted mesh (grid + jump times)."""
    d = indices.dim
    plans = build_plans(indices, threshold, config.dt, config.floor)
    rng = path_stream(seed, 0)
    dt = config.dt
    n_steps = config.n_steps
    lam = np.array([p.big_rate for p in plans] + [p.medium_rate for p in plans]) * dt
    x = np.asarray(x0, dtype=float).copy()
    if monitor.on_point(0.0, x.copy(), x.copy()):
        return
    for k in range(n_steps):
        t_k = k * dt
        counts = rng.poisson(lam)
        nb, nm = counts[:d], counts[d:]
        u = rng.random(int(3 * (nb.sum() + nm.sum())))
        off = 0
        big = []  # (time, axis, size)
        med = []  # (time, axis, size)
        for j in range(d):
            kj = int(nb[j])
            if kj:
                tj = t_k + u[off:off + kj] * dt
                mj = plans[j].big_magnitudes(u[off + kj:off + 2 * kj])
                sj = np.where(u[off + 2 * kj:off + 3 * kj] < 0.5, -1.0, 1.0)
                off += 3 * kj
                big.extend(zip(tj, [j] * kj, mj * sj))
        for j in range(d):
            mjn = int(nm[j])
            if mjn:
                tj = t_k + u[off:off + mjn] * dt
                mags = plans[j].medium_magnitudes(u[off + mjn:off + 2 * mjn])
                sgn = np.where(u[off + 2 * mjn:off + 3 * mjn] < 0.5, -1.0, 1.0)
                off += 3 * mjn
                med.extend(zip(tj, [j] * mjn, mags * sgn))
        big.sort()
        seg_ends = [(t, (j, s)) for t, j, s in big] + [(t_k + dt, None)]
        t_seg = t_k
        for t_end, jump in seg_ends:
            seg = t_end - t_seg
            inc = np.zeros(d)
            for tm, jm, sm in med:
                if t_seg < tm <= t_end or (t_seg == t_k and tm <= t_seg):
                    inc[jm] += sm
            if seg > 0.0:
                noise = rng.standard_normal(d)
                for j in range(d):
                    inc[j] += math.sqrt(plans[j].gauss_rate * seg) * noise[j]
            a = field.evaluate(x)
            x_new = x + a @ inc
            if monitor.on_point(t_end, x.copy(), x_new.copy()):
                return
            x = x_new
            if jump is not None:
                j, s = jump
                a = field.evaluate(x)
                x_post = x + s * a[:, j]
                if monitor.on_jump(t_end, j, s, x.copy(), x_post.copy()):
                    return
                x = x_post
            t_seg = t_end
    monitor.on_horizon(n_steps * dt, x.copy())


class _Recorder(_SingleMonitor):
    def __init__(self, x0):
        self.times = [0.0]
        self.states = [np.asarray(x0, dtype=float).copy()]
        self.marks = []

    def on_point(self, t, x_prev, x_new):
        if t > 0.0:
            self.times.append(t)
            self.states.append(x_new)
        return False

    def on_jump(self, t, axis, size, x_pre, x_post):
        self.marks.append(JumpMark(t, int(axis), float(size), x_pre, x_post))
        if self.times and self.times[-1] == t:
            # the segment end at the same clock time is the jump's left
            # limit, already carried by the mark; keep the skeleton
            # strictly increasing and right-continuous
            self.states[-1] = x_post
        else:
            self.times.append(t)
            self.states.append(x_post)
        return False


class _ExitMonitor(_SingleMonitor):
    def __init__(self, box, target=None):
        self.box = box
        self.target = target
        self.exit_time = math.nan
        self.exit_state = None
        self.pre_exit_state = None
        self.hit_time = None
        self.hit_state = None
        self.censored = False
        self.done = False

    def _check(self, t, x_prev, x_new):
        if self.target is not None and self.target.contains(x_new):
            self.hit_time = t
            self.hit_state = x_new
            self.done = True
            return True
        if not self.box.contains(x_new):
            self.exit_time = t
            self.exit_state = x_new
            self.pre_exit_state = x_prev
            self.done = True
            return True
        return False

    def on_point(self, t, x_prev, x_new):
        return self._check(t, x_prev, x_new)

    def on_jump(self, t, axis, size, x_pre, x_post):
        return self._check(t, x_pre, x_post)

    def on_horizon(self, t, x):
        self.censored = True

    def record(self):
        nanvec = np.full(self.box.center.shape[0], np.nan)
        return ExitRecord(
            exit_time=self.exit_time,
            exit_state=self.exit_state if self.exit_state is not None else nanvec,
            pre_exit_state=(self.pre_exit_state
                            if self.pre_exit_state is not None else nanvec),
            censored=self.censored,
            hit_time=self.hit_time,
            hit_state=self.hit_state)


def simulate_path(x0, field, indices, config, seed) -> Trajectory:
    """One path on the exact jump-adapted mesh, fully recorded.

    Returns the monitored skeleton (grid points plus jump times) and the
    jump marks with their pre/post states.
    """
    threshold = resolve_threshold(config)
    rec = _Recorder(x0)
    _run_single(x0, field, indices, config, seed, rec, threshold)
    return Trajectory(times=np.array(rec.times),
                      states=np.array(rec.states), marks=rec.marks)


def first_exit(x0, field, indices, box, config, seed) -> ExitRecord:
    """First monitored time a single path leaves the open box."""
    x0 = np.asarray(x0, dtype=float)
    threshold = resolve_threshold(config, box)
    mon = _ExitMonitor(box)
    _run_single(x0, field, indices, config, seed, mon, threshold)
    return mon.record()


def first_hit(x0, field, indices, target, box, config, seed) -> ExitRecord:
    """First hit of the target versus first exit of the box, single path."""
    x0 = np.asarray(x0, dtype=float)
    threshold = resolve_threshold(config, box)
    mon = _ExitMonitor(box, target=target)
    _run_single(x0, field, indices, config, seed, mon, threshold)
    return mon.record()


def count_transitions(trajectory: Trajectory, source, target) -> int:
    """Jump marks that move the path from the source set into the target set."""
    n = 0
    for mark in trajectory.marks:
        if source.contains(mark.pre_state) and target.contains(mark.post_state):
            n += 1
    return n
