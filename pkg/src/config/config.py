import os
from dotenv import load_dotenv

load_dotenv()

class Config:
    APP_ENV = os.getenv("INRAUDIO_ENV", "desk")
    THREADS = int(os.getenv("INRAUDIO_THREADS", 0))
    LOG_FILE = os.getenv("INRAUDIO_LOG_FILE")
    LOG_LEVEL = os.getenv("INRAUDIO_LOG_LEVEL", "INFO")

    SAMPLE_RATE = 22050
    CROP_LENGTH = 32768
    BATCH_SIZE = 16
    TOTAL_STEPS = 1_250_000
    EVAL_RATES = [8000, 16000, 22050, 44100]
    VAL_SPEAKERS = 10

    EMBEDDING_SIZE = 16
    TARGET_PRESET = "base"

    ENCODER_BASE_CHANNELS = 32
    ENCODER_STRIDES = [2, 4, 8, 8]
    ENCODER_DILATIONS = [1, 3, 9]
    ENCODER_KERNEL_SIZE = 7
    LATENT_DIM = 64
    HEAD_HIDDEN_WIDTH = 512
    HEAD_NUM_LAYERS = 6

    LOSS_PRESET = "l1_melstft"
    FFT_SIZES = None
    MEL_BINS = 128

    LEARNING_RATE = 5e-5
    BETA1 = 0.9
    BETA2 = 0.999
    EPS = 1e-8
    WEIGHT_DECAY = 0.01

    SEED = 0
    CHECKPOINT_EVERY = 10000
    LOG_EVERY = 100

class FullConfig(Config):
    """Full-scale run: 32768-sample crops, batch 16, 1.25M steps."""

class DeskConfig(Config):
    CROP_LENGTH = 2048
    BATCH_SIZE = 4
    TOTAL_STEPS = 5000
    VAL_SPEAKERS = 1

    TARGET_PRESET = "desk"
    LATENT_DIM = 16
    HEAD_HIDDEN_WIDTH = 32
    FFT_SIZES = [128, 256]
    LEARNING_RATE = 5e-4

    CHECKPOINT_EVERY = 1000
    LOG_EVERY = 50

PROFILES = {
    "full": FullConfig,
    "desk": DeskConfig,
}
