import json

import numpy as np
import pytest

from conftest import RATE, TINY_ENCODER, TINY_HEAD_WIDTH, TINY_TARGET, sine
from src.app.main import main
from src.config.config import Config
from src.data.audio import AudioBuffer, read_wav, write_wav
from src.data.models.hypernet import init_model
from src.data.models.target import TargetNetParams
from src.data.storage import load_checkpoint, save_checkpoint, save_inr
from src.utils.constants import ExitCode


def printed(capsys, prefix: str) -> list[str]:
    """Lines of captured standard output that start with `prefix`, log records excluded."""
    return [line for line in capsys.readouterr().out.splitlines() if line.startswith(prefix)]


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory, sine_dataset_dir):
    """
    Trains the desk preset for two steps on the sine dataset through the command line.

    Shared by the tests below so the model is trained only once per module.

    Returns:
        pathlib.Path: Run directory holding config.json, the manifests, the log and last.hsck.
    """
    out = tmp_path_factory.mktemp("run")
    code = main(["train", "--preset", "desk", "--data", str(sine_dataset_dir), "--out", str(out),
                 "--steps", "2", "--batch-size", "2"])
    assert code == ExitCode.OK
    return out


@pytest.fixture
def clip(tmp_path):
    """
    Writes a 4096-sample sine clip at the training rate.

    Returns:
        pathlib.Path: The WAV file.
    """
    path = tmp_path / "clip.wav"
    write_wav(sine(440.0), path)
    return path


def test_train_writes_run_directory(run_dir):
    for name in ("config.json", "manifest_train.json", "manifest_val.json", "train_log.csv", "last.hsck"):
        assert (run_dir / name).exists(), name
    checkpoint = load_checkpoint(run_dir / "last.hsck")
    assert checkpoint.step == 2
    assert checkpoint.experiment["preset"] == "desk"
    assert json.loads((run_dir / "config.json").read_text())["steps"] == 2


def test_train_resume_continues_the_step_count(run_dir, sine_dataset_dir, tmp_path, capsys):
    code = main(["train", "--preset", "desk", "--data", str(sine_dataset_dir), "--out", str(tmp_path),
                 "--steps", "3", "--batch-size", "2", "--resume", str(run_dir / "last.hsck")])
    assert code == ExitCode.OK
    assert printed(capsys, "steps=")[-1].startswith("steps=3 ")


def test_train_without_data_flag_is_a_usage_error(tmp_path):
    assert main(["train", "--out", str(tmp_path)]) == ExitCode.USAGE


def test_train_with_zero_steps_is_a_usage_error(tmp_path, sine_dataset_dir):
    code = main(["train", "--preset", "desk", "--data", str(sine_dataset_dir), "--out", str(tmp_path),
                 "--steps", "0"])
    assert code == ExitCode.USAGE


def test_train_on_missing_directory_is_a_usage_error(tmp_path):
    code = main(["train", "--preset", "desk", "--data", str(tmp_path / "nothing"), "--out", str(tmp_path / "run")])
    assert code == ExitCode.USAGE


def test_encode_is_deterministic(run_dir, clip, tmp_path):
    first, second = tmp_path / "a.hsir", tmp_path / "b.hsir"
    assert main(["encode", "--ckpt", str(run_dir / "last.hsck"), "--in", str(clip), "--out", str(first)]) == 0
    assert main(["encode", "--ckpt", str(run_dir / "last.hsck"), "--in", str(clip), "--out", str(second)]) == 0
    assert first.read_bytes()[:4] == b"HSIR"
    assert first.read_bytes() == second.read_bytes()


def test_encode_with_missing_checkpoint_fails(clip, tmp_path):
    code = main(["encode", "--ckpt", str(tmp_path / "none.hsck"), "--in", str(clip), "--out", str(tmp_path / "x")])
    assert code == ExitCode.FAILURE


def test_render_of_zero_weights_is_silent(tmp_path):
    inr = tmp_path / "zero.hsir"
    save_inr(TargetNetParams.zeros(TINY_TARGET), inr)

    code = main(["render", "--inr", str(inr), "--rate", "16000", "--samples", "100", "--out", str(tmp_path / "z.wav")])

    assert code == ExitCode.OK
    output = read_wav(tmp_path / "z.wav")
    assert output.sample_rate == 16000
    np.testing.assert_array_equal(output.samples, np.zeros(100))


def test_resample_renders_the_retargeted_length(run_dir, clip, tmp_path):
    out = tmp_path / "up.wav"
    code = main(["resample", "--ckpt", str(run_dir / "last.hsck"), "--in", str(clip), "--rate", "16000",
                 "--out", str(out), "--encoding", "pcm16"])
    assert code == ExitCode.OK
    output = read_wav(out)
    assert output.sample_rate == 16000
    assert len(output) == 2972


def test_reconstruct_writes_audio_and_spectrograms(run_dir, clip, tmp_path):
    out = tmp_path / "recon"
    assert main(["reconstruct", "--ckpt", str(run_dir / "last.hsck"), "--in", str(clip), "--out", str(out)]) == 0
    for name in ("original.wav", "reconstruction.wav", "original_spectrogram.csv", "reconstruction_spectrogram.csv"):
        assert (out / name).exists(), name
    assert len(read_wav(out / "reconstruction.wav")) == 4096


def test_eval_writes_reports(run_dir, sine_dataset_dir, tmp_path, capsys):
    out = tmp_path / "reports"
    code = main(["eval", "--ckpt", str(run_dir / "last.hsck"), "--data", str(sine_dataset_dir),
                 "--rates", "16000,22050", "--out", str(out)])

    assert code == ExitCode.OK
    lines = printed(capsys, "rate=")
    assert [line.split()[0] for line in lines] == ["rate=16000", "rate=22050"]
    assert all(" count=2 " in line for line in lines)
    assert (out / "report_16000.csv").exists()
    assert json.loads((out / "report_22050.json").read_text())["aggregate"]["count"] == 2


def test_eval_with_invalid_rates_is_a_usage_error(run_dir, sine_dataset_dir, tmp_path):
    code = main(["eval", "--ckpt", str(run_dir / "last.hsck"), "--data", str(sine_dataset_dir),
                 "--rates", "16k", "--out", str(tmp_path)])
    assert code == ExitCode.USAGE


def test_gradcheck_of_the_loss_passes(capsys):
    assert main(["gradcheck", "--component", "loss"]) == ExitCode.OK
    line = printed(capsys, "component=")[0]
    assert line.startswith("component=loss ")
    assert line.endswith("passed=true")


def test_gradcheck_of_unknown_component_is_a_usage_error():
    assert main(["gradcheck", "--component", "decoder"]) == ExitCode.USAGE


def test_spectrogram_of_silence_is_zero(tmp_path):
    wav, out = tmp_path / "silence.wav", tmp_path / "silence.csv"
    write_wav(AudioBuffer(np.zeros(1000), RATE), wav)

    assert main(["spectrogram", "--in", str(wav), "--fft", "64", "--hop", "16", "--out", str(out)]) == ExitCode.OK

    table = np.loadtxt(out, delimiter=",", skiprows=1)
    assert table.shape == ((1 + 1000 // 16) * 33, 3)
    assert np.all(table[:, 2] == 0.0)


def test_spectrogram_with_invalid_fft_size_is_a_usage_error(tmp_path):
    wav = tmp_path / "tone.wav"
    write_wav(sine(440.0, num_samples=512), wav)
    assert main(["spectrogram", "--in", str(wav), "--fft", "100", "--hop", "10", "--out", str(tmp_path / "x")]) == 2


def test_presets_lists_parameter_counts(capsys):
    assert main(["presets"]) == ExitCode.OK
    output = capsys.readouterr().out
    for count in ("params=14657", "params=206081", "params=752257"):
        assert count in output
    assert "loss=l1_melstft" in output


def test_unknown_command_is_a_usage_error():
    assert main(["fly"]) == ExitCode.USAGE


def test_eval_with_unknown_environment_uses_base_settings(monkeypatch, sine_dataset_dir, tmp_path, capsys):
    monkeypatch.setattr(Config, "APP_ENV", "staging")
    checkpoint = tmp_path / "bare.hsck"
    save_checkpoint(checkpoint, init_model(0, TINY_ENCODER, TINY_HEAD_WIDTH, TINY_TARGET))

    code = main(["eval", "--ckpt", str(checkpoint), "--data", str(sine_dataset_dir), "--rates", "22050",
                 "--split", "all", "--out", str(tmp_path / "reports")])

    assert code == ExitCode.OK
    assert printed(capsys, "rate=")[0].startswith("rate=22050 count=6 ")
