import os

# Paths
PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))

# Minimal .env loader (no external deps)
# .env has priority over existing environment variables
_ENV_PATH = os.path.join(PROJECT_ROOT, ".env")
if os.path.isfile(_ENV_PATH):
    try:
        with open(_ENV_PATH, "r", encoding="utf-8-sig") as _f:
            for _line in _f:
                _line = _line.strip()
                if not _line or _line.startswith("#"):
                    continue
                if "=" in _line:
                    _k, _v = _line.split("=", 1)
                    _k = _k.strip()
                    _val = _v.strip()
                    if len(_val) >= 2 and _val[0] == _val[-1] and _val[0] in ("'", '"'):
                        _val = _val[1:-1]
                    if _k:
                        os.environ[_k] = _val
    except OSError:
        pass


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        return default


# Enumeration cap: configurations with |Λ|·log2(q) above this many bits are refused
DEFAULT_CAP_BITS = 24


def get_cap_bits() -> int:
    """Current enumeration cap; ENTROFLOW_CAP_BITS overrides it (expert use)."""
    return _env_int("ENTROFLOW_CAP_BITS", DEFAULT_CAP_BITS)


# Numerics
PROB_TOL = 1e-12
UNIFORMIZATION_TAIL = 1e-12
EMPIRICAL_MIN_COUNT = _env_int("ENTROFLOW_MIN_COUNT", 25)

# Runtime
LOG_LEVEL = os.getenv("ENTROFLOW_LOG_LEVEL", "INFO").upper()
DEFAULT_THREADS = max(1, _env_int("ENTROFLOW_THREADS", 1))

# Other paths
RUN_DIR = os.getenv("ENTROFLOW_RUN_DIR", os.path.join(PROJECT_ROOT, ".runData"))
DB_DIR = os.path.join(PROJECT_ROOT, ".dbData")
DB_PATH = os.getenv("ENTROFLOW_DB_PATH", os.path.join(DB_DIR, "runs.db"))
