# app/utils/settings.py
import os
from dotenv import load_dotenv

load_dotenv()


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from None


# Repair-space caps (2^20 by default)
ORACLE_CAP = _int_env("CQA_ORACLE_CAP", 2**20)
GBLOCK_CAP = _int_env("CQA_GBLOCK_CAP", 2**20)

FUZZ_WORKERS = _int_env("CQA_FUZZ_WORKERS", 1)
LOG_LEVEL = os.getenv("CQA_LOG_LEVEL", "WARNING").upper()
