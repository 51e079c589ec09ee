import numpy as np
import pytest

from boundary_quality.blend import (
    AttentionMap,
    BasisStack,
    append_boundary_basis,
    assemble_instance,
    attention_weights,
    basis_box,
    paste_instance,
    read_attention_maps,
    read_basis_stack,
    write_attention_maps,
    write_basis_stack,
)
from boundary_quality.errors import FormatError, InputError, StateError
from boundary_quality.losses import sigmoid
from boundary_quality.masks import BBox, crop, resize_bilinear

from .oracles import assemble_loops, bilinear_at


def one_hot(c, j, r=7, mag=40.0):
    lg = np.full((c, r, r), -mag)
    lg[j] = mag
    return AttentionMap(lg)


@pytest.fixture
def stack(rng):
    return BasisStack(rng.normal(size=(4, 24, 20)), stride=4)


class TestAppend:
    def test_adds_channel(self, stack, rng):
        out = append_boundary_basis(stack, rng.random((24, 20)))
        assert out.num_channels == 5 and out.has_boundary_channel
        assert out.channels[:4].tobytes() == stack.channels.tobytes()

    def test_twice(self, stack):
        once = append_boundary_basis(stack, np.zeros((24, 20)))
        with pytest.raises(StateError):
            append_boundary_basis(once, np.zeros((24, 20)))

    def test_dimension_mismatch(self, stack):
        with pytest.raises(InputError):
            append_boundary_basis(stack, np.zeros((24, 21)))

    def test_immutable(self, stack):
        with pytest.raises(ValueError):
            stack.channels[0, 0, 0] = 1.0


class TestAssemble:
    def test_basis_box_rounds_outward(self):
        assert basis_box(BBox(5, 6, 10, 3), 4) == BBox(1, 1, 3, 2)

    def test_single_channel_identity(self, rng):
        s = BasisStack(rng.normal(size=(1, 10, 10)), stride=2)
        box = BBox(2, 4, 9, 7)
        out = assemble_instance(s, AttentionMap(rng.normal(size=(1, 7, 7))), box, 16)
        crop_b = crop(s.channels[0], basis_box(box, 2))
        np.testing.assert_allclose(out, sigmoid(resize_bilinear(crop_b, 16, 16)), rtol=0, atol=1e-15)

    def test_one_hot_selects_channel(self, stack):
        box = BBox(3, 5, 30, 40)
        for j in range(4):
            out = assemble_instance(stack, one_hot(4, j), box, 20)
            ref = sigmoid(resize_bilinear(crop(stack.channels[j], basis_box(box, 4)), 20, 20))
            assert np.abs(out - ref).max() <= 1e-12

    def test_matches_loop_oracle(self, rng):
        s = BasisStack(rng.normal(size=(3, 12, 12)), stride=4)
        att = AttentionMap(rng.normal(scale=2.0, size=(3, 7, 7)))
        box = BBox(6, 3, 25, 30)
        got = assemble_instance(s, att, box, 8)
        ref = assemble_loops(s.channels.tolist(), att.logits.tolist(), (6, 3, 25, 30), 4, 8)
        assert np.abs(got - np.array(ref)).max() <= 1e-10

    def test_weights_sum_to_one(self, rng):
        w = attention_weights(AttentionMap(rng.normal(scale=5, size=(5, 7, 7))), 33)
        assert np.abs(w.sum(axis=0) - 1).max() <= 1e-6

    def test_output_in_open_unit_interval(self, stack, rng):
        out = assemble_instance(stack, AttentionMap(rng.normal(size=(4, 7, 7))), BBox(0, 0, 80, 96), 56)
        assert (out > 0).all() and (out < 1).all()

    def test_shift_invariance(self, stack, rng):
        lg = rng.normal(size=(4, 7, 7))
        box = BBox(4, 4, 40, 40)
        a = assemble_instance(stack, AttentionMap(lg), box, 24)
        b = assemble_instance(stack, AttentionMap(lg + rng.normal(size=(1, 7, 7)) * 3), box, 24)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)

    def test_channel_permutation(self, stack, rng):
        lg = rng.normal(size=(4, 7, 7))
        perm = [2, 0, 3, 1]
        box = BBox(4, 8, 40, 44)
        a = assemble_instance(stack, AttentionMap(lg), box, 24)
        b = assemble_instance(BasisStack(stack.channels[perm]), AttentionMap(lg[perm]), box, 24)
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)

    def test_boundary_channel_participates(self, stack, rng):
        boundary = rng.random((24, 20))
        s5 = append_boundary_basis(stack, boundary)
        box = BBox(8, 8, 40, 48)
        out = assemble_instance(s5, one_hot(5, 4), box, 16)
        ref = sigmoid(resize_bilinear(crop(boundary, basis_box(box, 4)), 16, 16))
        assert np.abs(out - ref).max() <= 1e-12

    def test_channel_mismatch(self, stack):
        with pytest.raises(InputError, match="3 channels"):
            assemble_instance(stack, AttentionMap(np.zeros((3, 7, 7))), BBox(0, 0, 8, 8))


class TestPaste:
    def test_ones_fill_box(self):
        m = paste_instance(np.ones((5, 5)), BBox(2, 3, 6, 4), 12, 10)
        expected = np.zeros((10, 12), np.uint8)
        expected[3:7, 2:8] = 1
        np.testing.assert_array_equal(m, expected)

    def test_zeros_empty(self):
        assert paste_instance(np.zeros((5, 5)), BBox(2, 3, 6, 4), 12, 10).sum() == 0

    def test_clipped_at_image_edge(self):
        m = paste_instance(np.ones((4, 4)), BBox(8, 8, 6, 6), 10, 10)
        assert m.sum() == 4 and m[8:, 8:].all()

    def test_ramp_boundary_column(self):
        ramp = np.tile(np.linspace(0.0, 1.0, 8), (8, 1))
        box = BBox(3, 0, 20, 8)
        m = paste_instance(ramp, box, 30, 8)
        first_on = [j for j in range(20) if bilinear_at(ramp.tolist(), 8, 20, 0, j) >= 0.5][0]
        cols = np.flatnonzero(m[0])
        assert cols[0] == box.x + first_on and cols[-1] == box.x1 - 1
        assert (m == m[0]).all()


class TestFiles:
    def test_stack_roundtrip(self, tmp_path, rng):
        s = BasisStack(rng.normal(size=(3, 5, 4)).astype(np.float32), has_boundary_channel=True)
        p = tmp_path / "s.b2s"
        write_basis_stack(p, s)
        raw = p.read_bytes()
        assert raw[:4] == b"B2S1" and len(raw) == 16 + 3 * 5 * 4 * 4 + 1 and raw[-1] == 1
        back = read_basis_stack(p)
        np.testing.assert_array_equal(back.channels, s.channels)
        assert back.has_boundary_channel

    def test_stack_bad_flag(self, tmp_path, rng):
        p = tmp_path / "s.b2s"
        write_basis_stack(p, BasisStack(np.zeros((1, 2, 2))))
        p.write_bytes(p.read_bytes()[:-1] + b"\x07")
        with pytest.raises(FormatError, match="flag"):
            read_basis_stack(p)

    def test_attention_roundtrip(self, tmp_path, rng):
        maps = [AttentionMap(rng.normal(size=(2, 3, 3)).astype(np.float32)) for _ in range(3)]
        p = tmp_path / "a.b2a"
        write_attention_maps(p, maps)
        back = read_attention_maps(p)
        assert len(back) == 3
        for a, b in zip(maps, back):
            np.testing.assert_array_equal(a.logits, b.logits)

    def test_attention_truncated(self, tmp_path, rng):
        p = tmp_path / "a.b2a"
        write_attention_maps(p, [AttentionMap(np.zeros((2, 3, 3)))])
        p.write_bytes(p.read_bytes()[:-4])
        with pytest.raises(FormatError, match="truncated"):
            read_attention_maps(p)
