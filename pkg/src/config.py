import os
from dotenv import load_dotenv

# Load from .env if it exists (useful for local development)
load_dotenv()


def _env_int(name, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be a positive integer, got '{raw}'")
    if value < 1:
        raise ValueError(f"{name} must be a positive integer, got '{raw}'")
    return value


# --- Runtime ---
DWH_THREADS = _env_int("DWH_THREADS", 1)
DWH_LOG_LEVEL = os.getenv("DWH_LOG_LEVEL", "INFO")
CHUNK_SIZE = 256  # observations per worker chunk (and per RNG stream)

# --- Numerical guards ---
EXPONENT_CAP = 30.0
SIGMA_FLOOR = 1e-4
SIGMA_INIT_FLOOR = 1e-2
SIGMA_INV_MIN = 1e-3
DEFAULT_X_MAX = 100
ENUMERATION_BUDGET = 10**7

# --- Gibbs / contrastive divergence ---
GIBBS_STEPS = 1
GIBBS_SEED = 0

# --- Generalized mean field ---
GMF_TOL = 1e-8
GMF_MAX_ITER = 500
GMF_DAMPING = 0.3
GMF_DIVERGENCE_WINDOW = 20

# --- Training (epochs default: up to 1000 steps of gradient ascent) ---
TRAIN_EPOCHS = 1000
TRAIN_LEARNING_RATE = 1e-2
TRAIN_BATCH_SIZE = 100
TRAIN_MOMENTUM = 0.0
TRAIN_WEIGHT_DECAY = 1e-4
TRAIN_SEED = 0
PROJECTION_MARGIN = 0.05
PROJECTION_BISECTIONS = 40
SVD_INIT_SCALE = 0.01

# --- Evaluation ---
RECALL_GRID_POINTS = 11
LATENT_DIM_SWEEP = (5, 10, 20, 30, 40, 50)
TOPIC_TOP_WORDS = 10
TOPIC_TOP_DOCS = 5
ANNOTATION_TOP_N = (1, 5, 10, 20)

# --- File formats ---
MODEL_FORMAT_MAGIC = "DWH"
MODEL_FORMAT_VERSION = "v1"
VOCAB_HEADER = "#vocab"
BINS_HEADER = "#bins"
