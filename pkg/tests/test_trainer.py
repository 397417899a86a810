import csv
import math
import os

from dataclasses import replace

import numpy as np
import pytest
import torch

from conftest import CROP, RATE, TINY_ENCODER, TINY_HEAD_WIDTH, TINY_LOSS, TINY_TARGET
from src.app.services.trainer_service import (LAST_CHECKPOINT, LOG_FILE, TrainerService, TrainLog, TrainLogEntry,
                                              adamw_step, loss_and_grads, make_optimizer, parameter_vector, train)
from src.config.experiment import ExperimentConfig, TrainConfig
from src.data.audio import AudioBuffer, write_wav
from src.data.dataset import AudioDataset, AugmentConfig, build_manifest, first_window, make_batch, stack_batch
from src.data.models.hypernet import init_model, predict_inr
from src.data.models.target import make_grid, render
from src.data.storage import load_checkpoint
from src.utils.errors import ConfigError, InvalidRange, SilentReference, TrainingDiverged
from src.utils.losses import TotalLoss, total_loss


def tiny_config(**values) -> TrainConfig:
    defaults = dict(total_steps=4, batch_size=2, loss=TINY_LOSS, log_every=1, lr=1e-3)
    defaults.update(values)
    return TrainConfig(**defaults)


def fresh_model(seed: int = 0):
    return init_model(seed, TINY_ENCODER, TINY_HEAD_WIDTH, TINY_TARGET)


def test_adamw_first_step_moves_by_learning_rate():
    layer = torch.nn.Linear(1, 1)
    torch.nn.init.zeros_(layer.weight)
    torch.nn.init.zeros_(layer.bias)
    optimizer = make_optimizer(layer, TrainConfig(lr=5e-5, weight_decay=0.0))

    adamw_step(optimizer, layer, {name: torch.ones_like(p) for name, p in layer.named_parameters()})

    assert layer.weight.item() == pytest.approx(-5e-5, rel=1e-6)
    assert layer.bias.item() == pytest.approx(-5e-5, rel=1e-6)


def test_adamw_weight_decay_is_decoupled():
    layer = torch.nn.Linear(1, 1, bias=False)
    torch.nn.init.ones_(layer.weight)
    optimizer = make_optimizer(layer, TrainConfig(lr=5e-5, weight_decay=0.01))

    adamw_step(optimizer, layer, {"weight": torch.zeros(1, 1)})

    assert layer.weight.item() == pytest.approx(1.0 - 5e-5 * 0.01, abs=1e-9)


def test_gradient_clipping_limits_the_update():
    layer = torch.nn.Linear(1, 1, bias=False)
    torch.nn.init.zeros_(layer.weight)
    optimizer = make_optimizer(layer, TrainConfig(lr=1e-3, weight_decay=0.0))

    adamw_step(optimizer, layer, {"weight": torch.full((1, 1), 100.0)}, grad_clip=1.0)

    assert layer.weight.grad.norm().item() == pytest.approx(1.0, rel=1e-5)


def test_loss_and_grads_covers_every_parameter(tiny_model, datasets):
    train_set, _ = datasets
    batch = torch.from_numpy(stack_batch(make_batch(train_set, AugmentConfig.disabled(), 2, 0))).float()

    total, parts, grads = loss_and_grads(tiny_model, batch, TotalLoss(TINY_LOSS, train_set.sample_rate))

    assert math.isfinite(total)
    assert set(parts) == {"sl1", "stft"}
    assert set(grads) == {name for name, _ in tiny_model.named_parameters()}
    assert any(grad.abs().sum() > 0 for grad in grads.values())


def test_train_log_requires_increasing_steps():
    log = TrainLog()
    log.append(TrainLogEntry(0, 1.0, 0.1, 0.9, 0.0))
    with pytest.raises(InvalidRange):
        log.append(TrainLogEntry(0, 1.0, 0.1, 0.9, 0.0))


@pytest.mark.parametrize("total_steps, log_every", [(5, 2), (4, 1), (3, 5)])
def test_log_has_one_entry_per_logging_interval(datasets, total_steps, log_every):
    train_set, _ = datasets
    _, log = train(fresh_model(), train_set, tiny_config(total_steps=total_steps, log_every=log_every))
    assert len(log) == math.ceil(total_steps / log_every)
    assert [entry.step for entry in log.entries] == list(range(0, total_steps, log_every))


def test_training_is_deterministic(datasets):
    train_set, _ = datasets
    first, first_log = train(fresh_model(), train_set, tiny_config())
    second, second_log = train(fresh_model(), train_set, tiny_config())
    np.testing.assert_array_equal(parameter_vector(first), parameter_vector(second))
    assert [e.total_loss for e in first_log.entries] == [e.total_loss for e in second_log.entries]


def test_training_changes_the_parameters(datasets):
    train_set, _ = datasets
    before = parameter_vector(fresh_model())
    trained, _ = train(fresh_model(), train_set, tiny_config(total_steps=2))
    assert not np.array_equal(before, parameter_vector(trained))


def test_run_writes_checkpoints_and_log(tmp_path, datasets):
    train_set, _ = datasets
    service = TrainerService(fresh_model(), train_set, tiny_config(total_steps=4, checkpoint_every=2),
                             out_dir=tmp_path, experiment={"sample_rate": 22050})
    service.train()

    assert (tmp_path / "ckpt_2.hsck").exists()
    assert (tmp_path / "ckpt_4.hsck").exists()
    assert service.last_checkpoint == tmp_path / LAST_CHECKPOINT
    checkpoint = load_checkpoint(tmp_path / LAST_CHECKPOINT)
    assert checkpoint.step == 4
    assert checkpoint.experiment == {"sample_rate": 22050}
    with open(tmp_path / LOG_FILE) as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["step", "total_loss", "sl1", "stft", "wall_time"]
    assert [row[0] for row in rows[1:]] == ["0", "1", "2", "3"]


def test_resumed_run_matches_uninterrupted_run(tmp_path, datasets):
    train_set, _ = datasets
    config = tiny_config(total_steps=4, checkpoint_every=2)
    uninterrupted, _ = TrainerService(fresh_model(), train_set, config, out_dir=tmp_path / "full").train()

    halfway = load_checkpoint(tmp_path / "full" / "ckpt_2.hsck")
    resumed, log = TrainerService.resume(halfway, train_set, config, out_dir=tmp_path / "resumed").train()

    np.testing.assert_allclose(parameter_vector(resumed), parameter_vector(uninterrupted), rtol=0, atol=1e-7)
    assert [entry.step for entry in log.entries] == [2, 3]


def test_non_finite_loss_stops_training(datasets):
    train_set, _ = datasets
    model = fresh_model()
    with torch.no_grad():
        model.head.layers[-1].bias.fill_(math.nan)

    with pytest.raises(TrainingDiverged) as caught:
        TrainerService(model, train_set, tiny_config()).train()

    assert caught.value.step == 0
    assert caught.value.checkpoint is None
    assert math.isnan(caught.value.parts["sl1"])


def test_adamw_steps_do_not_increase_the_loss_on_a_fixed_batch(datasets):
    train_set, _ = datasets
    model = fresh_model().double()
    loss = TotalLoss(TINY_LOSS, train_set.sample_rate)
    batch = torch.from_numpy(stack_batch(make_batch(train_set, AugmentConfig.disabled(), 2, 0)))
    optimizer = make_optimizer(model, tiny_config(lr=1e-5, weight_decay=0.0))

    losses = []
    for _ in range(10):
        total, _, grads = loss_and_grads(model, batch, loss)
        losses.append(total)
        adamw_step(optimizer, model, grads)
    losses.append(loss_and_grads(model, batch, loss)[0])

    assert all(later <= earlier for earlier, later in zip(losses, losses[1:]))
    assert losses[-1] < losses[0]


def test_encode_then_render_reproduces_the_training_loss(datasets):
    train_set, _ = datasets
    model = fresh_model(seed=2).double()
    clip = first_window(train_set.load(0), train_set.crop_length)
    loss = TotalLoss(TINY_LOSS, train_set.sample_rate)

    trainer_total, _, _ = loss_and_grads(model, torch.from_numpy(clip.samples).unsqueeze(0), loss)
    reconstruction = render(predict_inr(model, clip), make_grid(len(clip), clip.sample_rate))
    pipeline_total, _ = total_loss(clip, reconstruction, TINY_LOSS)

    assert pipeline_total == pytest.approx(trainer_total, rel=1e-6)


def test_silent_training_data_stops_training(tmp_path):
    root = tmp_path / "data"
    (root / "spk00").mkdir(parents=True)
    write_wav(AudioBuffer(np.zeros(2048), RATE), root / "spk00" / "silence.wav")
    manifest, _ = build_manifest(root, CROP, RATE, val_speakers=0)

    with pytest.raises(TrainingDiverged) as caught:
        train(fresh_model(), AudioDataset(manifest), tiny_config(), AugmentConfig.disabled())

    assert caught.value.step == 0
    assert caught.value.parts == {}
    assert isinstance(caught.value.__cause__, SilentReference)


@pytest.mark.slow
@pytest.mark.skipif(os.getenv("INRAUDIO_RUN_SLOW") != "1", reason="set INRAUDIO_RUN_SLOW=1 to run")
def test_desk_model_overfits_a_single_crop(tmp_path):
    root = tmp_path / "data"
    (root / "spk00").mkdir(parents=True)
    t = np.arange(2048) / RATE
    write_wav(AudioBuffer(0.4 * np.sin(2 * np.pi * 330 * t) + 0.2 * np.sin(2 * np.pi * 990 * t), RATE),
              root / "spk00" / "clip.wav")
    manifest, _ = build_manifest(root, 2048, RATE, val_speakers=0)
    dataset = AudioDataset(manifest)

    experiment = ExperimentConfig.from_profile("desk").apply({"sample_rate": RATE, "crop_length": 2048})
    model = init_model(0, experiment.encoder, experiment.head_hidden_width, experiment.target)
    loss = TotalLoss(experiment.train.loss, RATE)
    batch = torch.from_numpy(stack_batch(make_batch(dataset, AugmentConfig.disabled(), 1, 0))).float()
    initial, _, _ = loss_and_grads(model, batch, loss)

    config = replace(experiment.train, total_steps=200, batch_size=1, lr=1e-3, log_every=50)
    train(model, dataset, config, AugmentConfig.disabled())

    final, _, _ = loss_and_grads(model, batch, loss)
    assert final < 0.1 * initial


@pytest.mark.parametrize("values", [{"total_steps": 0}, {"batch_size": 0}, {"log_every": 0}])
def test_train_config_rejects_invalid_values(values):
    with pytest.raises(ConfigError):
        TrainConfig(**values)
