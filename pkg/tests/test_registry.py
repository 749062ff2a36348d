import numpy as np
import pytest

from crossdim import registry


def test_field_catalog_dims():
    for name, (dim, fn) in registry.FIELDS.items():
        out = np.asarray(fn(np.zeros(dim)))
        assert out.shape == (dim,), name


def test_input_channels_shapes():
    for name, (dim, channels) in registry.INPUT_CHANNELS.items():
        for g in channels:
            assert np.asarray(g(np.zeros(dim))).shape == (dim,), name


def test_output_functions_scalar():
    q, p, h = registry.get_output_function("ddp_output6")
    assert (q, p) == (6, 1)
    assert h(np.ones(6)) == pytest.approx(7.0)


def test_feedbacks_return_input_vectors():
    for name in ("damp2", "damp3", "steer_stage1"):
        fb = registry.get_feedback(name)
        dim = 3 if name == "damp3" else 2
        assert np.asarray(fb(0.0, np.zeros(dim))).shape == (1,)


def test_time_signals():
    dim, zero = registry.get_time_signal("zero1")
    assert dim == 1 and zero(3.0)[0] == 0.0
    _, wave = registry.get_time_signal("sin1")
    assert wave(np.pi / 2)[0] == pytest.approx(1.0)


def test_span_bases_evaluate():
    for name, (dim, basis) in registry.SPAN_BASES.items():
        for b in basis:
            assert np.asarray(b(np.zeros(dim))).shape == (dim,), name


def test_unknown_names_list_alternatives():
    with pytest.raises(ValueError) as err:
        registry.get_field("warp9")
    assert "rotor2" in str(err.value)
    with pytest.raises(ValueError):
        registry.get_feedback("bang-bang")
