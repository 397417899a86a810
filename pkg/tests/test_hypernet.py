import numpy as np
import pytest
import torch

from conftest import TINY_ENCODER, TINY_HEAD_WIDTH, TINY_TARGET, sine
from src.data.audio import AudioBuffer
from src.data.models.encoder import EncoderConfig, WaveEncoder
from src.data.models.hypernet import (HeadConfig, HyperNetModel, WeightHead, encode, head_forward, init_model,
                                      predict_inr)
from src.data.models.target import TargetNetConfig, make_grid, param_count, render
from src.utils.errors import DimensionMismatch, InputTooShort, InvalidRange


def test_head_emits_one_value_per_target_parameter(tiny_model):
    theta = tiny_model(torch.zeros(2, 64))
    assert theta.shape == (2, param_count(TINY_TARGET))


def test_head_output_mismatch_raises():
    with pytest.raises(DimensionMismatch):
        HyperNetModel(TINY_ENCODER, HeadConfig(TINY_HEAD_WIDTH, 10), TINY_TARGET)


def test_head_must_have_six_layers():
    with pytest.raises(InvalidRange):
        HeadConfig(16, 10, num_layers=4)


def test_head_has_five_hidden_layers_and_an_output_layer(tiny_model):
    layers = tiny_model.head.layers
    assert len(layers) == 6
    assert [layer.out_features for layer in layers[:-1]] == [TINY_HEAD_WIDTH] * 5
    assert layers[-1].out_features == param_count(TINY_TARGET)


def test_same_seed_gives_identical_models():
    first = init_model(3, TINY_ENCODER, TINY_HEAD_WIDTH, TINY_TARGET)
    second = init_model(3, TINY_ENCODER, TINY_HEAD_WIDTH, TINY_TARGET)
    other = init_model(4, TINY_ENCODER, TINY_HEAD_WIDTH, TINY_TARGET)
    for (name, a), (_, b), (_, c) in zip(first.state_dict().items(), second.state_dict().items(),
                                         other.state_dict().items()):
        assert torch.equal(a, b), name
    assert any(not torch.equal(a, c) for a, c in zip(first.parameters(), other.parameters()))


def test_initial_weights_are_bounded_by_fan_in(tiny_model):
    layer = tiny_model.head.layers[0]
    bound = 1.0 / np.sqrt(layer.in_features)
    assert layer.weight.abs().max() <= bound + 1e-7
    output = tiny_model.head.layers[-1]
    assert output.weight.abs().max() <= 0.01 / np.sqrt(output.in_features) + 1e-9


def test_encode_returns_latent_vector(tiny_model):
    latent = encode(tiny_model, sine(440.0, num_samples=512))
    assert latent.shape == (TINY_ENCODER.latent_dim,)
    assert latent.dtype == np.float64


def test_encode_accepts_lengths_that_are_not_multiples_of_the_hop(tiny_model):
    assert encode(tiny_model, sine(440.0, num_samples=517)).shape == (TINY_ENCODER.latent_dim,)


def test_encode_rejects_input_shorter_than_total_stride(tiny_model):
    with pytest.raises(InputTooShort):
        encode(tiny_model, AudioBuffer(np.zeros(TINY_ENCODER.hop - 1), 22050))


def test_encoder_frames_have_one_frame_per_hop():
    encoder = WaveEncoder(EncoderConfig(base_channels=4, strides=(2, 4), latent_dim=8))
    frames = encoder.frames(torch.zeros(3, 64))
    assert frames.shape == (3, 8, 8)


def test_encoder_is_causal():
    encoder = WaveEncoder(EncoderConfig(base_channels=4, strides=(2, 2), latent_dim=8)).double()
    x = torch.randn(1, 64, dtype=torch.float64, generator=torch.Generator().manual_seed(0))
    changed = x.clone()
    changed[0, 40:] += 1.0
    with torch.no_grad():
        before, after = encoder.frames(x), encoder.frames(changed)
    torch.testing.assert_close(before[..., :40 // 4], after[..., :40 // 4])


def test_head_forward_checks_latent_size(tiny_model):
    with pytest.raises(DimensionMismatch):
        head_forward(tiny_model, np.zeros(TINY_ENCODER.latent_dim + 1))


def test_predict_inr_equals_head_of_encoding(tiny_model):
    x = sine(300.0, num_samples=512)
    direct = predict_inr(tiny_model, x)
    composed = head_forward(tiny_model, encode(tiny_model, x))
    assert direct.config == TINY_TARGET
    torch.testing.assert_close(direct.theta, composed.theta, rtol=1e-5, atol=1e-7)


def test_predict_inr_is_deterministic(tiny_model):
    x = sine(300.0, num_samples=512)
    assert torch.equal(predict_inr(tiny_model, x).theta, predict_inr(tiny_model, x).theta)


def test_fresh_model_emits_near_silent_networks(tiny_model):
    output = render(predict_inr(tiny_model, sine(300.0, num_samples=512)), make_grid(512, 22050))
    assert np.max(np.abs(output.samples)) < 0.1


def test_desk_model_shapes(desk_model):
    assert desk_model.target_config == TargetNetConfig(16, (8, 8))
    assert desk_model.encoder_config.latent_dim == 16
    assert desk_model.head_config.hidden_width == 32
    assert desk_model(torch.zeros(1, 2048)).shape == (1, param_count(desk_model.target_config))


def elu(values: np.ndarray) -> np.ndarray:
    return np.where(values > 0, values, np.expm1(values))


def test_zero_encoder_gives_zero_latent(tiny_model):
    with torch.no_grad():
        for parameter in tiny_model.encoder.parameters():
            parameter.zero_()
    latent = encode(tiny_model, AudioBuffer(np.random.default_rng(0).standard_normal(512), 22050))
    np.testing.assert_array_equal(latent, np.zeros(TINY_ENCODER.latent_dim))


def test_zero_head_gives_silent_network(tiny_model):
    with torch.no_grad():
        for parameter in tiny_model.head.parameters():
            parameter.zero_()
    params = predict_inr(tiny_model, sine(300.0, num_samples=512))
    assert torch.count_nonzero(params.theta) == 0
    np.testing.assert_array_equal(render(params, make_grid(64, 22050)).samples, np.zeros(64))


def test_tiny_head_matches_matrix_arithmetic():
    torch.manual_seed(0)
    head = WeightHead(2, HeadConfig(hidden_width=3, output_dim=4)).double()
    latent = np.array([0.7, -1.3])

    hidden = latent
    for layer in head.layers[:-1]:
        hidden = elu(layer.weight.detach().numpy() @ hidden + layer.bias.detach().numpy())
    last = head.layers[-1]
    expected = last.weight.detach().numpy() @ hidden + last.bias.detach().numpy()

    with torch.no_grad():
        actual = head(torch.from_numpy(latent).unsqueeze(0))[0].numpy()
    assert actual.shape == (4,)
    np.testing.assert_allclose(actual, expected, rtol=0, atol=1e-6)


def test_predict_inr_responds_to_a_single_sample(tiny_model):
    model = tiny_model.double()
    x = sine(300.0, num_samples=512)
    samples = x.samples.copy()
    samples[200] += 1e-3

    delta = predict_inr(model, x.with_samples(samples)).theta - predict_inr(model, x).theta

    assert float(torch.linalg.norm(delta)) > 0.0


@pytest.mark.parametrize("length", [8, 100, 512, 4096])
def test_latent_size_does_not_depend_on_input_length(tiny_model, length):
    assert encode(tiny_model, sine(300.0, num_samples=length)).shape == (TINY_ENCODER.latent_dim,)


def test_encoder_frame_count_follows_the_strides():
    encoder = WaveEncoder(EncoderConfig(base_channels=2, strides=(2, 4, 8, 8)))
    assert encoder.frames(torch.zeros(1, 2048)).shape[-1] == 4
