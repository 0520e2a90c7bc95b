"""Configuration management for the forgetting benchmark."""
import os
from pathlib import Path
from typing import Optional
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Application configuration."""

    # Paths
    BASE_DIR: Path = Path(__file__).parent.parent
    DATA_DIR: Optional[str] = os.getenv("FCB_DATA_DIR") or None
    OUTPUT_PATH: Path = BASE_DIR / os.getenv("FCB_OUTPUT_PATH", "output")
    LOG_PATH: Path = BASE_DIR / os.getenv("FCB_LOG_PATH", "logs")
    LOG_LEVEL: str = os.getenv("FCB_LOG_LEVEL", "INFO")

    # Training settings
    T_MAX: int = int(os.getenv("FCB_T_MAX", "2500"))
    BATCH_SIZE: int = int(os.getenv("FCB_BATCH_SIZE", "100"))
    EVAL_EVERY: int = int(os.getenv("FCB_EVAL_EVERY", "100"))
    FISHER_SAMPLES: int = int(os.getenv("FCB_FISHER_SAMPLES", "1000"))
    MAX_PARALLEL_RUNS: int = int(os.getenv("FCB_PARALLEL", "1"))
    DTYPE: str = os.getenv("FCB_DTYPE", "float32")

    MOMENTUM: float = 0.99

    # Dropout rates per family kind
    DROPOUT_RATES = {
        "fc": (0.2, 0.5),    # (input layer, hidden layers)
        "conv": (0.5, 0.5),  # single rate for input and hidden layers
    }

    SUPPORTED_DTYPES = ("float32", "float64")

    @classmethod
    def ensure_directories(cls):
        """Ensure all required directories exist."""
        cls.OUTPUT_PATH.mkdir(parents=True, exist_ok=True)
        cls.LOG_PATH.mkdir(parents=True, exist_ok=True)

    @classmethod
    def get_data_dir(cls, override: Optional[str] = None) -> Optional[Path]:
        """Resolve the MNIST directory, preferring an explicit override."""
        value = override or cls.DATA_DIR
        return Path(value) if value else None


# Initialize directories on import
Config.ensure_directories()
