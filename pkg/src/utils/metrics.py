import csv
import json
import math

from dataclasses import asdict, dataclass, field

import numpy as np

from src.data.audio import AudioBuffer
from src.utils.constants import ErrorMessages
from src.utils.dsp import stft
from src.utils.errors import DegenerateSignal, IoError, LengthMismatch

LSD_FFT_SIZE = 2048
LSD_HOP = 512
LSD_EPSILON = 1e-8


def _pair(x, xhat) -> tuple[np.ndarray, np.ndarray]:
    left = x.samples if isinstance(x, AudioBuffer) else np.asarray(x, dtype=np.float64)
    right = xhat.samples if isinstance(xhat, AudioBuffer) else np.asarray(xhat, dtype=np.float64)
    if left.shape != right.shape:
        raise LengthMismatch(ErrorMessages.SIGNAL_LENGTH_MISMATCH.format(left=left.size, right=right.size))
    return left, right


def mse(x, xhat) -> float:
    """Mean squared sample difference."""
    left, right = _pair(x, xhat)
    return float(np.mean((left - right) ** 2))


def lsd(x, xhat) -> float:
    """
    Log-spectral distance between two signals.

    Power spectrograms use an FFT of 2048, hop 512 and a Hann window; the result is the mean
    over frames of sqrt(mean over bins of (log10(P(x) + 1e-8) - log10(P(xhat) + 1e-8))^2).
    """
    left, right = _pair(x, xhat)
    power_left = stft(AudioBuffer(left, 1), LSD_FFT_SIZE, LSD_HOP).magnitudes ** 2
    power_right = stft(AudioBuffer(right, 1), LSD_FFT_SIZE, LSD_HOP).magnitudes ** 2
    difference = np.log10(power_left + LSD_EPSILON) - np.log10(power_right + LSD_EPSILON)
    return float(np.mean(np.sqrt(np.mean(difference ** 2, axis=1))))


def si_snr(x, xhat) -> float:
    """
    Scale-invariant signal-to-noise ratio of xhat against the reference x, in dB.

    Both signals are made zero-mean; s is the projection of xhat onto x and e = xhat - s.

    Returns:
        float: 10 log10(||s||^2 / ||e||^2), or +inf when the residual is exactly zero.

    Raises:
        DegenerateSignal: If either signal has zero variance.
    """
    left, right = _pair(x, xhat)
    left = left - left.mean()
    right = right - right.mean()
    reference_energy = np.dot(left, left)
    if reference_energy == 0.0 or np.dot(right, right) == 0.0:
        raise DegenerateSignal(ErrorMessages.DEGENERATE_SIGNAL)
    target = (np.dot(right, left) / reference_energy) * left
    noise = right - target
    noise_energy = np.dot(noise, noise)
    if noise_energy == 0.0:
        return math.inf
    return float(10.0 * np.log10(np.dot(target, target) / noise_energy))


@dataclass(frozen=True)
class MetricRow:
    id: str
    mse: float
    lsd: float
    si_snr_db: float


@dataclass
class MetricReport:
    """
    Per-item metrics of one evaluation run and their aggregate.

    Attributes:
        rate (int): Sampling rate the reconstructions were rendered at.
        rows (list[MetricRow]): One row per successfully evaluated item.
        failures (list[dict]): {"id", "error"} of every item that raised.
    """
    rate: int
    rows: list[MetricRow] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    @property
    def aggregate(self) -> dict:
        """
        Arithmetic means over the rows.

        Infinite SI-SNR values are left out of the SI-SNR mean and counted in
        `si_snr_infinite`; NaN marks a mean over no values.
        """
        def mean(values):
            return float(np.mean(values)) if values else math.nan

        finite_snr = [row.si_snr_db for row in self.rows if math.isfinite(row.si_snr_db)]
        return {
            "mse": mean([row.mse for row in self.rows]),
            "lsd": mean([row.lsd for row in self.rows]),
            "si_snr_db": mean(finite_snr),
            "si_snr_infinite": len(self.rows) - len(finite_snr),
            "count": len(self.rows),
            "failed": len(self.failures),
        }

    def to_csv(self, path) -> None:
        try:
            with open(path, "w", newline="") as handle:
                writer = csv.writer(handle)
                writer.writerow(["id", "mse", "lsd", "si_snr_db"])
                for row in self.rows:
                    writer.writerow([row.id, repr(row.mse), repr(row.lsd), repr(row.si_snr_db)])
        except OSError as error:
            raise IoError(ErrorMessages.WRITE_FAILED.format(path=path, reason=error)) from error

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "aggregate": self.aggregate,
            "items": [asdict(row) for row in self.rows],
            "failures": list(self.failures),
        }

    def to_json(self, path) -> None:
        try:
            with open(path, "w") as handle:
                json.dump(self.to_dict(), handle, indent=2)
        except OSError as error:
            raise IoError(ErrorMessages.WRITE_FAILED.format(path=path, reason=error)) from error
