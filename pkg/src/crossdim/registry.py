"""Named built-in evaluators referenced by scenario files.

Scenario configs cannot carry arbitrary code, so nonlinear drifts, input
channels, output functions, feedback laws, disturbances, and span bases
are looked up here by name.  Library users can pass their own callables
directly and never touch this module.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "get_feedback",
    "get_field",
    "get_input_channels",
    "get_output_function",
    "get_span_basis",
    "get_time_signal",
]


def _rotor2(x):
    return np.array([x[1], -x[0]])


def _ddp2_drift(x):
    return np.array([x[1], 2.0 * x[0] / 3.0])


def _ddp3_drift(z):
    return np.array([z[1] - z[2], z[0], -z[0]])


def _ddp2_input(x):
    return np.array([-1.0 - x[1], 1.0])


def _ddp3_input(z):
    return np.array([z[2] - z[1], 1.0, -1.0])


def _ddp_output6(w):
    return w[0] + w[1] + w[2] + w[3] + w[4] + w[5] + w[0] * w[1]


def _ddp_disturbance6(w):
    return np.array(
        [1.0 + w[4] ** 2, -1.0 - w[5] ** 2, 0.0, -1.0 - w[1], 1.0, w[0]]
    )


#: State fields x -> R^n (drifts and field arguments to restriction checks).
FIELDS = {
    "rotor2": (2, _rotor2),
    "ddp2_drift": (2, _ddp2_drift),
    "ddp3_drift": (3, _ddp3_drift),
    "ddp_disturbance6": (6, _ddp_disturbance6),
}

#: Input channel lists: name -> (dim, tuple of g_k(x) -> R^n).
INPUT_CHANNELS = {
    "ddp2_input": (2, (_ddp2_input,)),
    "ddp3_input": (3, (_ddp3_input,)),
}

#: Output functions: name -> (q, p, h) with h on R^q producing R^p.
OUTPUT_FUNCTIONS = {
    "ddp_output6": (6, 1, _ddp_output6),
}

#: State feedback laws u(t, x).
FEEDBACKS = {
    # damp the actuated coordinate of the planar mode
    "damp2": lambda t, x: np.array([-x[0] - x[1]]),
    # damp the chain coordinates of the three-dimensional mode
    "damp3": lambda t, z: np.array([-z[0] - z[1] - 3.0 * z[2]]),
    # drive the off-diagonal coordinate to the replicated line by T = 1
    "steer_stage1": lambda t, x: np.array([-2.0 * x[0] - 1.0]),
}

#: Time signals t -> R^l used as disturbances.
TIME_SIGNALS = {
    "zero1": (1, lambda t: np.zeros(1)),
    "sin1": (1, lambda t: np.array([math.sin(t)])),
}

#: Span bases for invariant-subspace membership checks: name -> (dim, evaluators).
SPAN_BASES = {
    "ddp2_invariant": (
        2,
        (lambda x: np.array([-1.0, 1.0 + 2.0 * x[0] / 3.0]),),
    ),
    "ddp3_invariant": (
        3,
        (
            lambda z: np.array([-1.0, 1.0 + z[0], 0.0]),
            lambda z: np.array([-1.0, 0.0, 1.0 + z[0]]),
        ),
    ),
}


def _lookup(table: dict, name: str, kind: str):
    try:
        return table[name]
    except KeyError:
        known = ", ".join(sorted(table))
        raise ValueError(f"unknown {kind} {name!r}; available: {known}") from None


def get_field(name: str):
    """(dim, evaluator) for a named state field."""
    return _lookup(FIELDS, name, "field")


def get_input_channels(name: str):
    """(dim, evaluators) for a named input channel list."""
    return _lookup(INPUT_CHANNELS, name, "input channel set")


def get_output_function(name: str):
    """(q, p, h) for a named output function."""
    return _lookup(OUTPUT_FUNCTIONS, name, "output function")


def get_feedback(name: str):
    """A named state-feedback policy u(t, x)."""
    return _lookup(FEEDBACKS, name, "feedback")


def get_time_signal(name: str):
    """(dim, evaluator) for a named time signal."""
    return _lookup(TIME_SIGNALS, name, "time signal")


def get_span_basis(name: str):
    """(dim, evaluators) for a named span basis."""
    return _lookup(SPAN_BASES, name, "span basis")
