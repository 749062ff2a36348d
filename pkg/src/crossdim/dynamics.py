"""Dimension-varying system simulation.

A system is a finite set of fixed-dimension modes plus a rule for jumping
between their dimensions.  Simulation integrates the active mode on each
dwell interval with classical fixed-step RK4 (linear autonomous modes take
a matrix-exponential fast path), applies the transition map at every
switch, and logs a jump event with gap, direction and impulse amplitude.
Impulses are discrete reset records, never numerically integrated spikes.

Vector fields of dimension n lift to any multiple k*n so that integral
curves commute with entry replication; embedding every mode into the lcm
dimension turns a dimension-varying system into an ordinary switched
system with resets.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .cdspace import as_entries, project, projector, stp_add, v_norm
from .dkstp import bridge, dk_apply
from .errors import NumericFailure
from .switching import (
    JumpEvent,
    SwitchingSignal,
    TransitionMap,
    lipschitz_of,
    make_jump_event,
    nearest_map,
)

__all__ = [
    "Disturbance",
    "DvSystem",
    "Mode",
    "OutputMap",
    "Segment",
    "Trajectory",
    "dwell_bound",
    "embed_common",
    "expm",
    "integrate_mode",
    "lift_field",
    "lift_function",
    "simulate",
]

log = logging.getLogger(__name__)

DEFAULT_STEP = 1e-3
_TIME_EPS = 1e-12


def expm(A, t: float = 1.0) -> np.ndarray:
    """e^{tA} by scaling-and-squaring of the truncated Taylor series.

    The argument is halved until its 1-norm is at most 1/2, the series is
    summed to machine precision, and the result squared back up.  Aims at
    1e-12 relative accuracy for well-conditioned inputs.
    """
    M = np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expm expects a square matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("expm expects finite entries")
    n = M.shape[0]
    B = M * float(t)
    norm = float(np.linalg.norm(B, 1))
    if not math.isfinite(norm):
        raise NumericFailure("matrix too large to exponentiate", operation="expm")
    squarings = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    C = B / (2.0**squarings)
    term = np.eye(n)
    acc = np.eye(n)
    for k in range(1, 41):
        term = term @ C / k
        acc = acc + term
        if np.linalg.norm(term, 1) <= 1e-18 * np.linalg.norm(acc, 1):
            break
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(squarings):
            acc = acc @ acc
            if not np.all(np.isfinite(acc)):
                raise NumericFailure("overflow while squaring", operation="expm")
    return acc


@dataclass(frozen=True)
class Mode:
    """One fixed-dimension mode: drift plus optional input channels.

    ``drift`` is either an (n, n) matrix or an evaluator x -> R^n.
    ``inputs`` is an (n, k) matrix whose columns are the input directions,
    or a sequence of k evaluators x -> R^n for state-dependent channels.
    ``feedback`` (t, x) -> R^k closes the loop when the mode is simulated
    without an explicit control.
    """

    label: str
    dim: int
    drift: object
    inputs: object = None
    feedback: object = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("mode dimension must be positive")
        if not callable(self.drift):
            A = np.asarray(self.drift, dtype=float).copy()
            if A.shape != (self.dim, self.dim):
                raise ValueError(
                    f"mode {self.label!r}: drift matrix must be "
                    f"{self.dim}x{self.dim}, got {A.shape}"
                )
            A.setflags(write=False)
            object.__setattr__(self, "drift", A)
        if self.inputs is not None and not self._inputs_callable():
            B = np.asarray(self.inputs, dtype=float).copy()
            if B.ndim == 1:
                B = B.reshape(-1, 1)
            if B.shape[0] != self.dim:
                raise ValueError(
                    f"mode {self.label!r}: input matrix needs {self.dim} rows"
                )
            B.setflags(write=False)
            object.__setattr__(self, "inputs", B)

    def _inputs_callable(self) -> bool:
        return self.inputs is not None and not isinstance(
            self.inputs, np.ndarray
        ) and all(callable(g) for g in self.inputs)

    @property
    def is_linear(self) -> bool:
        return isinstance(self.drift, np.ndarray)

    @property
    def n_inputs(self) -> int:
        if self.inputs is None:
            return 0
        if isinstance(self.inputs, np.ndarray):
            return self.inputs.shape[1]
        return len(self.inputs)

    def input_matrix_at(self, x) -> np.ndarray:
        """The (n, k) input matrix, evaluating state-dependent channels at x."""
        if isinstance(self.inputs, np.ndarray):
            return self.inputs
        return np.column_stack([np.asarray(g(x), dtype=float) for g in self.inputs])


@dataclass(frozen=True)
class Disturbance:
    """Measurable disturbance of fixed dimension entering through the drift."""

    dim: int
    evaluator: object

    def __call__(self, t: float) -> np.ndarray:
        v = np.asarray(self.evaluator(t), dtype=float).reshape(-1)
        if v.size != self.dim:
            raise ValueError(
                f"disturbance evaluator returned dimension {v.size}, "
                f"expected {self.dim}"
            )
        return v


@dataclass(frozen=True)
class OutputMap:
    """Constant-dimension output, evaluated through the nominal dimension q.

    Linear maps apply H through the bridge matrix (so states of any active
    dimension are accepted); function maps apply h to the projection of the
    state onto dimension q.
    """

    q: int
    matrix: np.ndarray | None = None
    func: object = None
    p: int | None = None

    @classmethod
    def from_matrix(cls, H) -> "OutputMap":
        H = np.asarray(H, dtype=float)
        if H.ndim == 1:
            H = H.reshape(1, -1)
        return cls(q=H.shape[1], matrix=H, p=H.shape[0])

    @classmethod
    def from_function(cls, h, q: int, p: int) -> "OutputMap":
        return cls(q=q, func=h, p=p)

    def __call__(self, x) -> np.ndarray:
        a = as_entries(x)
        if self.matrix is not None:
            return self.matrix @ bridge(self.q, a.size) @ a
        return np.atleast_1d(np.asarray(self.func(project(a, self.q)), dtype=float))


@dataclass(frozen=True)
class DvSystem:
    """A dimension-varying system: modes, a transition rule, optional output.

    ``transitions`` is the string ``"nearest"`` or a mapping from ordered
    mode-index pairs (i, j) to explicit transition maps.  ``impulse_scale``
    scales the logged impulse amplitude of every jump event.
    """

    modes: tuple
    transitions: object = "nearest"
    output: OutputMap | None = None
    impulse_scale: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise ValueError("system needs at least one mode")
        if isinstance(self.transitions, dict):
            for (i, j), tm in self.transitions.items():
                src, dst = self.modes[i].dim, self.modes[j].dim
                if (tm.source_dim, tm.target_dim) != (src, dst):
                    raise ValueError(
                        f"transition {i}->{j} must map dimension {src} to {dst}"
                    )

    def transition(self, i: int, j: int) -> TransitionMap:
        if self.transitions == "nearest":
            return nearest_map(self.modes[i].dim, self.modes[j].dim)
        try:
            return self.transitions[(i, j)]
        except KeyError:
            raise ValueError(f"no transition map for mode pair ({i}, {j})") from None

    def transition_maps_in_use(self):
        """All maps the rule can produce (ordered mode pairs)."""
        if self.transitions == "nearest":
            n = len(self.modes)
            return [
                self.transition(i, j) for i in range(n) for j in range(n) if i != j
            ]
        return list(self.transitions.values())


@dataclass(frozen=True)
class Segment:
    """Samples of one dwell interval: constant dimension throughout."""

    times: np.ndarray
    states: np.ndarray  # shape (len(times), dim)


@dataclass(frozen=True)
class Trajectory:
    """Simulation output: per-sample records plus the jump events.

    At each switch both the pre- and post-switch states appear as samples
    with the same timestamp, so sample times are nondecreasing.
    """

    times: np.ndarray
    mode_indices: np.ndarray
    dims: np.ndarray
    states: list
    vnorms: np.ndarray
    outputs: list | None
    events: list

    @property
    def max_dim(self) -> int:
        return int(self.dims.max())

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def switch_entry_norms(self):
        """(time, pre-switch v-norm) for every proper switch (t > 0)."""
        return [(ev.time, v_norm(ev.pre_state)) for ev in self.events if ev.time > 0.0]


def _mode_rhs(mode: Mode, control, disturbance):
    """Assemble dx/dt = drift(+disturbance) + inputs * control for one mode."""
    n = mode.dim
    if mode.is_linear:
        A = mode.drift
        if disturbance is None:
            drift = lambda t, x: A @ x
        else:
            # Disturbance of foreign dimension enters through the
            # dimension-keeping product: A (x + eta) in the lcm dimension.
            # The zero fast path keeps eta == 0 bit-identical to no
            # disturbance at all.
            def drift(t, x):
                eta = disturbance(t)
                if not eta.any():
                    return A @ x
                return dk_apply(A, stp_add(x, eta).entries)

    else:
        f = mode.drift
        if disturbance is None:
            drift = lambda t, x: np.asarray(f(x), dtype=float)
        else:

            def drift(t, x):
                eta = disturbance(t)
                if not eta.any():
                    return np.asarray(f(x), dtype=float)
                return np.asarray(f(x + project(eta, n)), dtype=float)
    if control is None or mode.inputs is None:
        return drift

    def rhs(t, x):
        u = np.atleast_1d(np.asarray(control(t, x), dtype=float))
        return drift(t, x) + mode.input_matrix_at(x) @ u

    return rhs


def _grid(t0: float, t1: float, step: float):
    """Uniform grid from t0, final partial step shortened to land exactly on t1."""
    span = t1 - t0
    n_full = int(math.floor(span / step + _TIME_EPS))
    times = [t0 + i * step for i in range(n_full + 1)]
    if t1 - times[-1] > _TIME_EPS * max(1.0, abs(t1)):
        times.append(t1)
    else:
        times[-1] = t1
    return times


def integrate_mode(
    mode: Mode,
    x0,
    t0: float,
    t1: float,
    step: float,
    control=None,
    disturbance=None,
    method: str = "auto",
) -> Segment:
    """Integrate one mode over [t0, t1] with fixed-step RK4.

    ``control`` overrides the mode's own feedback; pass
    ``replace(mode, feedback=None)`` to force open loop.  Linear autonomous
    modes propagate with the matrix exponential when ``method`` is "auto"
    or "expm"; the two paths agree to well below 1e-8 at the default step.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = as_entries(x0).copy()
    if x.size != mode.dim:
        raise ValueError(
            f"initial state has dimension {x.size}, mode {mode.label!r} "
            f"expects {mode.dim}"
        )
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    if control is None:
        control = mode.feedback
    times = _grid(t0, t1, step)
    if method not in ("auto", "rk4", "expm"):
        raise ValueError(f"unknown integration method {method!r}")
    autonomous = mode.is_linear and control is None and disturbance is None
    use_expm = method == "expm" or (method == "auto" and autonomous)
    if use_expm and not autonomous:
        raise ValueError("expm path requires a linear autonomous mode")

    states = np.empty((len(times), x.size))
    states[0] = x
    if use_expm:
        E = expm(mode.drift, step)
        for k in range(1, len(times)):
            h = times[k] - times[k - 1]
            x = (E if abs(h - step) <= _TIME_EPS else expm(mode.drift, h)) @ x
            states[k] = x
    else:
        rhs = _mode_rhs(mode, control, disturbance)
        probe = np.asarray(rhs(times[0], x))
        if probe.shape != x.shape:
            raise ValueError(
                f"mode {mode.label!r}: evaluator returned shape {probe.shape}, "
                f"expected {x.shape}"
            )
        for k in range(1, len(times)):
            t, h = times[k - 1], times[k] - times[k - 1]
            k1 = rhs(t, x)
            k2 = rhs(t + h / 2, x + (h / 2) * k1)
            k3 = rhs(t + h / 2, x + (h / 2) * k2)
            k4 = rhs(t + h, x + h * k3)
            x = x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise NumericFailure(
                    f"state diverged in mode {mode.label!r}",
                    operation="integrate_mode",
                    time=times[k],
                )
            states[k] = x
    return Segment(np.asarray(times), states)


def lift_field(mode: Mode, k: int) -> Mode:
    """Lift a mode of dimension n to dimension k*n.

    On replicated states the lifted field replicates the base field, so the
    two flows commute with entry replication.  Linear drift and input
    matrices stay matrices; evaluators are wrapped.
    """
    if k < 1:
        raise ValueError("lift multiplier must be >= 1")
    if k == 1:
        return mode
    n, N = mode.dim, k * mode.dim
    down = projector(N, n).matrix  # block means
    up = projector(n, N).matrix  # entry replication

    if mode.is_linear:
        drift = up @ mode.drift @ down
    else:
        f = mode.drift
        drift = lambda y: np.repeat(np.asarray(f(down @ y), dtype=float), k)

    inputs = None
    if mode.inputs is not None:
        if isinstance(mode.inputs, np.ndarray):
            inputs = up @ mode.inputs
        else:
            inputs = tuple(
                (lambda y, g=g: np.repeat(np.asarray(g(down @ y), dtype=float), k))
                for g in mode.inputs
            )

    feedback = None
    if mode.feedback is not None:
        fb = mode.feedback
        feedback = lambda t, y: fb(t, down @ y)

    return Mode(f"{mode.label}@{N}", N, drift, inputs, feedback)


def lift_function(h, q: int, y) -> np.ndarray:
    """Evaluate a function native to dimension q at a point of any dimension.

    The argument is projected onto dimension q first; equivalent points give
    identical values, so this is well defined on the quotient space.
    """
    return np.atleast_1d(np.asarray(h(project(y, q)), dtype=float))


def _resolve_control(mode: Mode, control):
    if control is None:
        return mode.feedback
    if callable(control):
        return control
    # mapping keyed by mode label
    return control.get(mode.label, mode.feedback)


def simulate(
    system: DvSystem,
    signal: SwitchingSignal,
    x0,
    step: float = DEFAULT_STEP,
    control=None,
    disturbance=None,
    method: str = "auto",
) -> Trajectory:
    """Run a dimension-varying system along a switching signal.

    The active mode is integrated on each dwell interval (switch times are
    grid points, never interpolated across); at each switch the transition
    map produces the post state and a jump event is logged.  An initial
    state of foreign dimension is projected onto the first mode's dimension
    with an event at t = 0.  ``control`` may be a single policy or a
    mapping from mode labels to policies; per-mode feedback is the default.
    """
    n_modes = len(system.modes)
    unknown = sorted(m for m in signal.mode_indices if not 0 <= m < n_modes)
    if unknown:
        raise ValueError(f"signal references unknown mode indices {unknown}")

    x = as_entries(x0).copy()
    events: list[JumpEvent] = []
    intervals = signal.intervals()
    first_mode = system.modes[intervals[0][2]]
    if x.size != first_mode.dim:
        post = project(x, first_mode.dim)
        events.append(make_jump_event(0.0, x, post, system.impulse_scale))
        x = post

    times, mode_idx, dims, states = [], [], [], []
    for seg_no, (ta, tb, mi) in enumerate(intervals):
        mode = system.modes[mi]
        seg = integrate_mode(
            mode,
            x,
            ta,
            tb,
            step,
            control=_resolve_control(mode, control),
            disturbance=disturbance,
            method=method,
        )
        times.extend(seg.times.tolist())
        mode_idx.extend([mi] * len(seg.times))
        dims.extend([mode.dim] * len(seg.times))
        states.extend(list(seg.states))
        x = seg.states[-1]
        if seg_no + 1 < len(intervals):
            mj = intervals[seg_no + 1][2]
            tm = system.transition(mi, mj)
            post = tm(x)
            events.append(make_jump_event(tb, x, post, system.impulse_scale))
            x = post

    vnorms = np.array([v_norm(s) for s in states])
    outputs = None
    if system.output is not None:
        outputs = [system.output(s) for s in states]
    return Trajectory(
        np.asarray(times),
        np.asarray(mode_idx, dtype=int),
        np.asarray(dims, dtype=int),
        states,
        vnorms,
        outputs,
        events,
    )


def embed_common(system: DvSystem) -> DvSystem:
    """Embed every mode into the lcm of the native dimensions.

    The result is an ordinary switched system (all modes share one
    dimension) whose trajectories from replicated initial states stay
    equivalent to the original ones; switches become explicit reset maps
    confined to the replicated subspaces, and their jump events carry the
    same gaps and directions as the original impulse log.
    """
    n = math.lcm(*(m.dim for m in system.modes))
    lifted = tuple(lift_field(m, n // m.dim) for m in system.modes)
    count = len(system.modes)
    table = {}
    for i in range(count):
        for j in range(count):
            if i == j:
                continue
            if isinstance(system.transitions, dict) and (
                i,
                j,
            ) not in system.transitions:
                continue
            base = system.transition(i, j)
            W = (
                projector(system.modes[j].dim, n).matrix
                @ base.matrix
                @ projector(n, system.modes[i].dim).matrix
            )
            table[(i, j)] = TransitionMap(n, n, W, lipschitz=lipschitz_of(W))
    return DvSystem(
        modes=lifted,
        transitions=table if count > 1 else "nearest",
        output=system.output,
        impulse_scale=system.impulse_scale,
    )


def dwell_bound(
    system: DvSystem,
    gamma: float,
    lipschitz: float | None = None,
    max_dwell: float = 50.0,
    coarse_step: float = 0.05,
    refine_tol: float = 1e-3,
) -> float | None:
    """Smallest dwell time making every mode-plus-jump cycle a contraction.

    Finds (coarse grid scan, then bisection) the least dwell D with
    L * max_i ||e^{D A_i}||_2 <= 1 - gamma, where L is the largest
    transition Lipschitz constant (or the explicit override).  Returns None
    when a mode is not Hurwitz or no dwell up to ``max_dwell`` works.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    mats = []
    for mode in system.modes:
        if not mode.is_linear:
            raise ValueError("dwell_bound requires linear modes")
        eig = np.linalg.eigvals(mode.drift)
        if eig.real.max() >= 0.0:
            log.warning("mode %r is not Hurwitz; no dwell bound", mode.label)
            return None
        mats.append(mode.drift)
    if lipschitz is None:
        lips = [tm.lipschitz for tm in system.transition_maps_in_use()]
        lipschitz = max(lips) if lips else 1.0

    def contracts(delta: float) -> bool:
        worst = max(np.linalg.norm(expm(A, delta), 2) for A in mats)
        return lipschitz * worst <= 1.0 - gamma

    lo, hi = 0.0, None
    d = coarse_step
    while d <= max_dwell + _TIME_EPS:
        if contracts(d):
            hi = d
            break
        lo = d
        d += coarse_step
    if hi is None:
        return None
    while hi - lo > refine_tol:
        mid = 0.5 * (lo + hi)
        if contracts(mid):
            hi = mid
        else:
            lo = mid
    return hi
