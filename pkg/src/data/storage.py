import json
import logging
import os
import struct

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from src.data.models.encoder import EncoderConfig
from src.data.models.hypernet import HeadConfig, HyperNetModel
from src.data.models.target import TargetNetConfig, TargetNetParams, param_count
from src.utils.constants import ErrorMessages
from src.utils.errors import BadMagic, CheckpointIoError, CorruptHeader, IoError, LengthMismatch, VersionMismatch

logger = logging.getLogger(__name__)

INR_MAGIC = b"HSIR"
INR_VERSION = 1
CHECKPOINT_MAGIC = b"HSCK"
CHECKPOINT_VERSION = 1
U32 = struct.Struct("<I")


class _Reader:
    """Sequential little-endian reader that reports truncation as LengthMismatch."""

    def __init__(self, payload: bytes):
        self.payload = payload
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.payload):
            raise LengthMismatch(ErrorMessages.TRUNCATED_STREAM.format(
                actual=len(self.payload), expected=self.offset + size))
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def u32(self) -> int:
        return U32.unpack(self.take(4))[0]

    def float32(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * count), dtype="<f4").copy()

    def finish(self) -> None:
        extra = len(self.payload) - self.offset
        if extra:
            raise LengthMismatch(ErrorMessages.TRAILING_BYTES.format(extra=extra))


def _check_header(reader: _Reader, magic: bytes, version: int) -> None:
    found = reader.take(len(magic))
    if found != magic:
        raise BadMagic(ErrorMessages.BAD_MAGIC.format(found=found, expected=magic))
    found_version = reader.u32()
    if found_version != version:
        raise VersionMismatch(ErrorMessages.VERSION_MISMATCH.format(found=found_version, expected=version))


def _float32_bytes(tensor: torch.Tensor) -> bytes:
    return tensor.detach().cpu().to(torch.float32).numpy().astype("<f4").tobytes()


def _write_atomic(path: Path, payload: bytes, error_class, message: str = ErrorMessages.WRITE_FAILED) -> None:
    temporary = path.with_name(path.name + ".tmp")
    try:
        temporary.write_bytes(payload)
        os.replace(temporary, path)
    except OSError as error:
        raise error_class(message.format(path=path, reason=error)) from error


def serialize_inr(params: TargetNetParams) -> bytes:
    """
    Encodes a target network as an HSIR byte stream.

    Layout: magic "HSIR", version, L, hidden layer count and every hidden width (all u32
    little endian), then theta as little-endian float32 in layer order.
    """
    config = params.config
    header = [INR_MAGIC, U32.pack(INR_VERSION), U32.pack(config.embedding_size), U32.pack(len(config.hidden_widths))]
    header += [U32.pack(width) for width in config.hidden_widths]
    return b"".join(header) + _float32_bytes(params.theta)


def deserialize_inr(payload: bytes) -> TargetNetParams:
    """
    Decodes an HSIR byte stream.

    Raises:
        BadMagic: If the stream does not start with "HSIR".
        VersionMismatch: For an unknown format version.
        LengthMismatch: If the stream is truncated or carries trailing bytes.
    """
    reader = _Reader(payload)
    _check_header(reader, INR_MAGIC, INR_VERSION)
    embedding_size = reader.u32()
    widths = tuple(reader.u32() for _ in range(reader.u32()))
    config = TargetNetConfig(embedding_size, widths)
    theta = reader.float32(param_count(config))
    reader.finish()
    return TargetNetParams(config, torch.from_numpy(theta))


def save_inr(params: TargetNetParams, path) -> None:
    _write_atomic(Path(path), serialize_inr(params), IoError)


def load_inr(path) -> TargetNetParams:
    try:
        payload = Path(path).read_bytes()
    except OSError as error:
        raise IoError(ErrorMessages.FILE_NOT_FOUND.format(path=path)) from error
    return deserialize_inr(payload)


@dataclass
class Checkpoint:
    """
    Contents of an HSCK file.

    Attributes:
        model (HyperNetModel): Restored model in float32.
        step (int): Number of optimizer steps taken when the checkpoint was written.
        experiment (dict): Resolved experiment configuration recorded with the model.
        optimizer (dict | None): AdamW hyper-parameters and per-parameter moments, if saved.
    """
    model: HyperNetModel
    step: int
    experiment: dict
    optimizer: dict | None = None


def _optimizer_moments(model: HyperNetModel, optimizer: torch.optim.Optimizer | None):
    if optimizer is None:
        return None, []
    group = optimizer.param_groups[0]
    hyper = {
        "lr": group["lr"],
        "betas": list(group["betas"]),
        "eps": group["eps"],
        "weight_decay": group["weight_decay"],
    }
    named = list(model.named_parameters())
    if not all(param in optimizer.state for _, param in named):
        return hyper, []
    moments = []
    for _, param in named:
        state = optimizer.state[param]
        moments.extend([state["exp_avg"], state["exp_avg_sq"]])
    return hyper, moments


def save_checkpoint(path, model: HyperNetModel, step: int = 0, experiment: dict | None = None,
                    optimizer: torch.optim.Optimizer | None = None) -> None:
    """
    Writes an HSCK checkpoint.

    Layout: magic "HSCK", u32 version, u32 length of a UTF-8 JSON block (model configs,
    experiment config, step, tensor manifest, optimizer hyper-parameters), then every
    state_dict tensor as little-endian float32 in declaration order, then the AdamW first
    and second moments of every parameter, in the same order, when an optimizer is given.

    Raises:
        CheckpointIoError: If the file cannot be written.
    """
    state = model.state_dict()
    hyper, moments = _optimizer_moments(model, optimizer)
    header = {
        "configs": model.configs(),
        "experiment": experiment or {},
        "step": int(step),
        "tensors": [[name, list(tensor.shape)] for name, tensor in state.items()],
        "optimizer": hyper,
        "has_moments": bool(moments),
    }
    block = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = b"".join([
        CHECKPOINT_MAGIC, U32.pack(CHECKPOINT_VERSION), U32.pack(len(block)), block,
        *(_float32_bytes(tensor) for tensor in state.values()),
        *(_float32_bytes(tensor) for tensor in moments),
    ])
    _write_atomic(Path(path), payload, CheckpointIoError, ErrorMessages.CHECKPOINT_IO)
    logger.info("checkpoint_saved path=%s step=%d bytes=%d", path, step, len(payload))


def load_checkpoint(path) -> Checkpoint:
    """
    Reads an HSCK checkpoint and rebuilds the model.

    Raises:
        IoError: If the file cannot be read.
        BadMagic, VersionMismatch, LengthMismatch: For malformed files.
        CorruptHeader: If the JSON block cannot be decoded.
    """
    try:
        payload = Path(path).read_bytes()
    except OSError as error:
        raise IoError(ErrorMessages.FILE_NOT_FOUND.format(path=path)) from error

    reader = _Reader(payload)
    _check_header(reader, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)
    try:
        header = json.loads(reader.take(reader.u32()).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as error:
        raise CorruptHeader(ErrorMessages.BAD_CHECKPOINT_HEADER.format(reason=error)) from error

    configs = header["configs"]
    target = TargetNetConfig(**configs["target"])
    model = HyperNetModel(EncoderConfig(**configs["encoder"]), HeadConfig(**configs["head"]), target,
                          seed=configs["seed"])

    state = {}
    for name, shape in header["tensors"]:
        values = reader.float32(int(np.prod(shape, dtype=np.int64)))
        state[name] = torch.from_numpy(values).reshape(shape)
    model.load_state_dict(state)

    optimizer = None
    if header.get("optimizer") is not None:
        optimizer = dict(header["optimizer"])
        moments = {}
        if header.get("has_moments"):
            for name, param in model.named_parameters():
                exp_avg = torch.from_numpy(reader.float32(param.numel())).reshape(param.shape)
                exp_avg_sq = torch.from_numpy(reader.float32(param.numel())).reshape(param.shape)
                moments[name] = (exp_avg, exp_avg_sq)
        optimizer["moments"] = moments
    reader.finish()

    return Checkpoint(model=model, step=int(header["step"]), experiment=header.get("experiment", {}),
                      optimizer=optimizer)
