import numpy as np
import pytest

from luml1.errors import InvalidInputError
from luml1.gradcheck import adjoint_error, check_conv_gradients, check_net_gradients
from luml1.image import Image
from luml1.losses import l2_loss
from luml1.net import (
    ConvLayer,
    TinyNet,
    build_tinynet,
    conv_backward,
    conv_forward,
    net_backward,
    net_forward,
    relu_backward,
    relu_forward,
)
from luml1.rng import stream

from conftest import rand_image
from oracles import loop_conv2d, straight_line_net


class TestConvForward:
    def test_identity_kernel(self):
        kernels = np.zeros((2, 2, 3, 3))
        kernels[0, 0, 1, 1] = 1.0
        kernels[1, 1, 1, 1] = 1.0
        layer = ConvLayer(kernels, np.zeros(2))
        x = stream(1, 20).random((2, 6, 6))
        out, _ = conv_forward(x, layer)
        assert np.array_equal(out, x)

    def test_zero_kernels_give_constant_bias(self):
        layer = ConvLayer(np.zeros((2, 1, 3, 3)), np.array([0.5, -1.0]))
        out, _ = conv_forward(stream(2, 20).random((1, 4, 4)), layer)
        assert np.all(out[0] == 0.5)
        assert np.all(out[1] == -1.0)

    def test_matches_loop_oracle(self):
        rng = stream(3, 21)
        layer = ConvLayer(rng.normal(size=(1, 1, 3, 3)), rng.normal(size=1))
        x = rng.random((1, 5, 5))
        out, _ = conv_forward(x, layer)
        assert np.max(np.abs(out - loop_conv2d(x, layer.kernels, layer.bias))) < 1e-12

    def test_matches_loop_oracle_multichannel(self):
        rng = stream(4, 21)
        layer = ConvLayer(rng.normal(size=(4, 3, 5, 5)), rng.normal(size=4))
        x = rng.random((3, 7, 6))
        out, _ = conv_forward(x, layer)
        assert np.max(np.abs(out - loop_conv2d(x, layer.kernels, layer.bias))) < 1e-12

    def test_channel_mismatch_rejected(self):
        layer = ConvLayer(np.zeros((1, 2, 3, 3)), np.zeros(1))
        with pytest.raises(InvalidInputError):
            conv_forward(np.zeros((3, 4, 4)), layer)

    def test_even_kernel_rejected(self):
        with pytest.raises(InvalidInputError):
            ConvLayer(np.zeros((1, 1, 2, 2)), np.zeros(1))


class TestConvBackward:
    def test_zero_gradient_gives_zero(self):
        rng = stream(5, 22)
        layer = ConvLayer(rng.normal(size=(2, 3, 3, 3)), rng.normal(size=2))
        x = rng.random((3, 5, 5))
        out, cache = conv_forward(x, layer)
        gx, gk, gb = conv_backward(np.zeros_like(out), cache)
        assert np.all(gx == 0.0) and np.all(gk == 0.0) and np.all(gb == 0.0)

    def test_finite_difference_agreement(self):
        result = check_conv_gradients(seed=6)
        assert result.ok, result.line()

    def test_adjoint_identity(self):
        assert adjoint_error(seed=7) < 1e-9

    def test_shape_mismatch_rejected(self):
        rng = stream(8, 22)
        layer = ConvLayer(rng.normal(size=(2, 1, 3, 3)), np.zeros(2))
        _, cache = conv_forward(rng.random((1, 4, 4)), layer)
        with pytest.raises(InvalidInputError):
            conv_backward(np.zeros((2, 5, 5)), cache)


class TestRelu:
    def test_forward_values(self):
        out, _ = relu_forward(np.array([-1.0, 0.0, 2.0]))
        assert out.tolist() == [0.0, 0.0, 2.0]

    def test_backward_masks_negatives_and_zero(self):
        x = np.array([-1.0, 0.0, 2.0])
        _, mask = relu_forward(x)
        grad = relu_backward(np.ones_like(x), mask)
        assert grad.tolist() == [0.0, 0.0, 1.0]

    def test_finite_difference_away_from_zero(self):
        x = np.array([-0.5, 0.8, 1.2])
        _, mask = relu_forward(x)
        for i in range(3):
            h = 1e-5
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            fd = (relu_forward(xp)[0].sum() - relu_forward(xm)[0].sum()) / (2 * h)
            analytic = relu_backward(np.ones_like(x), mask)[i]
            assert abs(fd - analytic) < 1e-9


class TestTinyNet:
    def test_zero_net_is_identity_in_residual_mode(self):
        net = TinyNet([ConvLayer(np.zeros((3, 3, 3, 3)), np.zeros(3))])
        img = rand_image(1, 9, 7)
        out, _ = net_forward(net, img)
        assert np.array_equal(out.data, img.data)

    def test_zero_net_without_residual_is_zero(self):
        net = TinyNet([ConvLayer(np.zeros((3, 3, 3, 3)), np.zeros(3))], residual_mode=False)
        out, _ = net_forward(net, rand_image(2, 6, 6))
        assert np.all(out.data == 0.0)

    def test_matches_straight_line_reimplementation(self):
        net = build_tinynet(33, hidden_channels=6, hidden_depth=1)
        img = rand_image(3, 8, 8)
        out, _ = net_forward(net, img)
        assert np.max(np.abs(out.data - straight_line_net(net, img.data))) < 1e-10

    def test_forward_is_deterministic(self):
        net = build_tinynet(34)
        img = rand_image(4, 12, 12)
        a, _ = net_forward(net, img)
        b, _ = net_forward(net, img)
        assert np.array_equal(a.data, b.data)

    def test_default_depth_and_width(self):
        net = build_tinynet(35)
        assert len(net.layers) == 5
        assert net.layers[0].in_ch == 3 and net.layers[0].out_ch == 16
        assert net.layers[-1].in_ch == 16 and net.layers[-1].out_ch == 3

    def test_final_layer_starts_near_zero(self):
        net = build_tinynet(36)
        assert np.abs(net.layers[-1].kernels).max() < 0.01
        assert np.abs(net.layers[0].kernels).max() > 0.01

    def test_wrong_channel_chain_rejected(self):
        with pytest.raises(InvalidInputError):
            TinyNet(
                [
                    ConvLayer(np.zeros((4, 3, 3, 3)), np.zeros(4)),
                    ConvLayer(np.zeros((3, 5, 3, 3)), np.zeros(3)),
                ]
            )

    def test_grayscale_input_rejected(self):
        net = build_tinynet(37)
        with pytest.raises(InvalidInputError):
            net_forward(net, rand_image(5, c=1))


class TestNetBackward:
    def test_end_to_end_finite_differences(self):
        result = check_net_gradients(seed=9)
        assert result.ok and result.checked > 0 and result.excluded == 0, result.line()

    def test_zero_upstream_gradient_gives_zero_tape(self):
        net = build_tinynet(38, hidden_channels=4, hidden_depth=0)
        img = rand_image(6, 6, 6)
        out, cache = net_forward(net, img)
        tape = net_backward(net, cache, Image(np.zeros_like(out.data)))
        for g in tape.parameter_grads():
            assert np.all(g == 0.0)
        assert np.all(tape.input_grad.data == 0.0)

    def test_l2_at_minimum_gives_zero_tape(self):
        net = build_tinynet(39, hidden_channels=4, hidden_depth=0)
        img = rand_image(7, 6, 6)
        out, cache = net_forward(net, img)
        grad = l2_loss(out, out).grad  # pred == target -> zero gradient
        tape = net_backward(net, cache, grad)
        for g in tape.parameter_grads():
            assert np.all(g == 0.0)

    def test_stale_cache_rejected(self):
        net_a = build_tinynet(40, hidden_channels=4, hidden_depth=0)
        net_b = build_tinynet(40, hidden_channels=4, hidden_depth=1)
        img = rand_image(8, 6, 6)
        out, cache = net_forward(net_a, img)
        with pytest.raises(RuntimeError):
            net_backward(net_b, cache, out)

    def test_tape_shapes_mirror_parameters(self):
        net = build_tinynet(41, hidden_channels=4, hidden_depth=1)
        img = rand_image(9, 6, 6)
        out, cache = net_forward(net, img)
        tape = net_backward(net, cache, out)
        for g, p in zip(tape.parameter_grads(), net.parameters()):
            assert g.shape == p.shape
