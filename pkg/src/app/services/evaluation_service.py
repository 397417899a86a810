import logging

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from src.config.config import Config
from src.data.dataset import AudioDataset, first_window
from src.data.models.hypernet import HyperNetModel, predict_inr
from src.data.models.target import make_grid, render
from src.utils.constants import ErrorMessages
from src.utils.dsp import retarget_length, sinc_resample
from src.utils.errors import EmptyDataset, InrAudioError
from src.utils.metrics import MetricReport, MetricRow, lsd, mse, si_snr

logger = logging.getLogger(__name__)


class EvaluationService:
    def __init__(self, model: HyperNetModel, dataset: AudioDataset, workers: int = 1):
        """
        Initializes the EvaluationService.

        Args:
            model (HyperNetModel): Model whose reconstructions are scored.
            dataset (AudioDataset): Evaluation items, usually the validation split.
            workers (int): Number of items scored concurrently.
        """
        if len(dataset) == 0:
            raise EmptyDataset(ErrorMessages.EMPTY_DATASET.format(reason="nothing to evaluate"))
        self.model = model
        self.dataset = dataset
        self.workers = max(1, workers)

    def evaluate_item(self, index: int, target_rate: int) -> MetricRow:
        """
        Scores one item at `target_rate`.

        The first crop_length samples (zero padded) are encoded at the training rate, the
        predicted network is rendered on a grid of round(N * target_rate / rate) points and
        compared to the band-limited resampling of the same crop.
        """
        crop = first_window(self.dataset.load(index), self.dataset.crop_length)
        params = predict_inr(self.model, crop)
        num_samples = retarget_length(len(crop), crop.sample_rate, target_rate)
        reconstruction = render(params, make_grid(num_samples, target_rate))
        reference = sinc_resample(crop, target_rate)
        return MetricRow(
            id=self.dataset.item_id(index),
            mse=mse(reference, reconstruction),
            lsd=lsd(reference, reconstruction),
            si_snr_db=si_snr(reference, reconstruction),
        )

    def _score(self, index: int, target_rate: int):
        try:
            return self.evaluate_item(index, target_rate)
        except InrAudioError as error:
            item_id = self.dataset.item_id(index)
            logger.warning("evaluation_item_failed id=%s rate=%d error=%s", item_id, target_rate, error)
            return {"id": item_id, "error": f"{type(error).__name__}: {error}"}

    def evaluate_set(self, target_rate: int) -> MetricReport:
        """
        Scores every item; items that raise are listed as failures and left out of the aggregate.

        Returns:
            MetricReport: Rows in dataset order.
        """
        indices = range(len(self.dataset))
        if self.workers == 1:
            results = [self._score(index, target_rate) for index in indices]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(lambda index: self._score(index, target_rate), indices))

        report = MetricReport(rate=int(target_rate))
        for result in results:
            if isinstance(result, MetricRow):
                report.rows.append(result)
            else:
                report.failures.append(result)
        aggregate = report.aggregate
        logger.info("evaluation rate=%d count=%d failed=%d mse=%.6g lsd=%.4f si_snr_db=%.2f",
                    target_rate, aggregate["count"], aggregate["failed"],
                    aggregate["mse"], aggregate["lsd"], aggregate["si_snr_db"])
        return report

    def evaluate_rates(self, rates=None) -> dict[int, MetricReport]:
        """One report per rate, Config.EVAL_RATES by default."""
        rates = Config.EVAL_RATES if rates is None else rates
        return {int(rate): self.evaluate_set(int(rate)) for rate in rates}


def evaluate_set(model: HyperNetModel, dataset: AudioDataset, target_rate: int) -> MetricReport:
    return EvaluationService(model, dataset).evaluate_set(target_rate)


def evaluate_rates(model: HyperNetModel, dataset: AudioDataset, rates=None) -> dict[int, MetricReport]:
    return EvaluationService(model, dataset).evaluate_rates(rates)


def write_reports(reports: dict[int, MetricReport], out_dir) -> list[Path]:
    """Writes report_<rate>.csv and report_<rate>.json for every report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for rate, report in reports.items():
        csv_path = out_dir / f"report_{rate}.csv"
        json_path = out_dir / f"report_{rate}.json"
        report.to_csv(csv_path)
        report.to_json(json_path)
        written += [csv_path, json_path]
    return written
