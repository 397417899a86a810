

class ErrorMessages:
    """
    Centralized collection of predefined error messages used throughout the toolkit.

    This class provides standardized, reusable message constants for the failures that
    audio I/O, signal processing, model construction, training and the command line can
    report. Keeping them in one place makes exception texts consistent between the
    library and the CLI, and lets tests match on them.

    Messages that carry values are format strings and are filled in with `str.format`
    at the raise site.

    Categories include:
    - Audio and WAV file errors
    - Signal-processing argument errors
    - Target network, hypernetwork and file-format errors
    - Loss, metric and dataset errors
    - Training and configuration errors

    Usage:
        raise UnsupportedFormat(ErrorMessages.UNSUPPORTED_SAMPLE_FORMAT.format(dtype=data.dtype))
    """
    NON_POSITIVE_SAMPLE_RATE = "Sample rate must be a positive integer, got {rate}."
    NON_FINITE_SAMPLES = "Audio samples must be finite."
    NOT_MONO = "Audio samples must be a one-dimensional sequence."
    FILE_NOT_FOUND = "File not found: {path}"
    NOT_A_WAV_FILE = "Not a RIFF/WAVE file: {path}"
    CORRUPT_WAV_HEADER = "Corrupt WAV header in {path}: {reason}"
    UNSUPPORTED_WAV_ENCODING = "Unsupported WAV encoding in {path}: {reason}"
    UNSUPPORTED_SAMPLE_FORMAT = "Unsupported sample format {dtype}; expected PCM16 or 32-bit float."
    UNKNOWN_ENCODING = "Unknown output encoding '{encoding}'; expected 'pcm16' or 'float32'."
    WRITE_FAILED = "Could not write {path}: {reason}"

    EMPTY_SIGNAL = "Cannot compute a spectrogram of an empty signal."
    FFT_SIZE_NOT_POWER_OF_TWO = "FFT size must be a power of two, got {fft_size}."
    HOP_TOO_SMALL = "Hop size must be at least 1, got {hop}."
    WINDOW_TOO_LONG = "Window length {win} exceeds FFT size {fft_size}."
    NEGATIVE_FREQUENCY = "Frequency must be non-negative, got {freq}."
    INVALID_MEL_RANGE = "Mel range requires 0 <= f_min < f_max <= sample_rate/2, got f_min={f_min}, f_max={f_max}, sample_rate={rate}."
    INVALID_MEL_BINS = "Number of mel bins must be at least 1, got {mel_bins}."
    NON_POSITIVE_TARGET_RATE = "Target rate must be positive, got {rate}."

    INVALID_EMBEDDING_SIZE = "Embedding size must be at least 1, got {size}."
    NO_HIDDEN_LAYERS = "Target network needs at least one hidden layer."
    INVALID_LAYER_WIDTH = "Layer widths must be positive, got {widths}."
    THETA_LENGTH_MISMATCH = "Theta has {actual} entries but the target network needs {expected}."
    NON_FINITE_PARAMS = "Target network parameters contain NaN or Inf values."
    TOO_FEW_GRID_SAMPLES = "A coordinate grid needs at least 2 samples, got {num_samples}."
    EMPTY_GRID = "Cannot render on an empty coordinate grid."
    INVALID_GRID = "Grid times must be non-decreasing and lie within [0, 1]."
    UNKNOWN_TARGET_PRESET = "Unknown target network preset '{name}'; available: {available}."

    BAD_MAGIC = "Bad magic {found!r}; expected {expected!r}."
    VERSION_MISMATCH = "Unsupported format version {found}; expected {expected}."
    TRUNCATED_STREAM = "Stream ended after {actual} bytes of payload; expected {expected}."
    TRAILING_BYTES = "Stream carries {extra} unexpected trailing bytes."
    BAD_CHECKPOINT_HEADER = "Checkpoint header is not valid JSON: {reason}"

    INPUT_TOO_SHORT = "Input has {length} samples; the encoder needs at least {minimum}."
    LATENT_DIMENSION_MISMATCH = "Latent vector has {actual} entries; the head expects {expected}."
    HEAD_OUTPUT_MISMATCH = "Head output dimension {output_dim} does not match the target network's {param_count} parameters."
    HEAD_LAYER_COUNT = "The weight head must have exactly 6 layers, got {num_layers}."
    INVALID_ENCODER_CONFIG = "Invalid encoder configuration: {reason}"

    SIGNAL_LENGTH_MISMATCH = "Signals must have equal lengths, got {left} and {right}."
    SILENT_REFERENCE = "Reference signal is silent; spectral convergence is undefined."
    UNKNOWN_LOSS_PRESET = "Unknown loss preset '{name}'; available: {available}."
    INVALID_LOSS_CONFIG = "Invalid loss configuration: {reason}"

    DEGENERATE_SIGNAL = "SI-SNR is undefined for a zero-variance signal."

    EMPTY_DATASET = "Dataset is empty: {reason}"
    UNREADABLE_FILE = "Skipping unreadable file {path}: {reason}"
    INVALID_BREAK_FREQUENCY = "Break frequency must lie in (0, {nyquist}), got {freq}."
    INVALID_CROP_LENGTH = "Crop length must be positive, got {crop_length}."
    INVALID_BATCH_SIZE = "Batch size must be at least 1, got {batch_size}."
    INVALID_LSB = "Dequantization step must be positive, got {lsb}."
    INVALID_AUGMENT_RANGE = "Phase mangle range requires 0 < f_min < f_max < rate/2, got {f_min}..{f_max} at {rate} Hz."

    NON_FINITE_LOSS = "Loss became non-finite at step {step}: {parts}"
    TRAINING_DIVERGED = "Training diverged at step {step}; last good checkpoint: {checkpoint}"
    CHECKPOINT_IO = "Could not write checkpoint {path}: {reason}"
    INVALID_TOTAL_STEPS = "Total steps must be at least 1, got {steps}."
    LOG_STEP_ORDER = "Log steps must increase: {step} after {previous}."
    UNKNOWN_COMPONENT = "Unknown gradcheck component '{name}'; available: {available}."

    UNKNOWN_CONFIG_KEYS = "Unknown configuration keys: {keys}"
    CONFIG_NOT_FOUND = "Configuration file not found: {path}"
    CONFIG_NOT_JSON = "Configuration file {path} is not valid JSON: {reason}"
    UNKNOWN_PROFILE = "Unknown configuration preset '{name}'; available: {available}."
    INVALID_RATES = "Rates must be a comma separated list of positive integers, got {rates!r}."


class ExitCode:
    """
    Collection of process exit codes returned by the command-line front end.

    Every command maps its outcome to one of these values so scripts can branch on the result.

    Attributes:
        OK (int): 0: The command completed successfully.
        FAILURE (int): 1: Runtime, I/O or verification failure (e.g. a failed gradient check).
        USAGE (int): 2: Usage or configuration error (bad flags, malformed files, invalid values).
        DIVERGED (int): 3: Training produced a non-finite loss.
    """
    OK = 0
    FAILURE = 1
    USAGE = 2
    DIVERGED = 3
