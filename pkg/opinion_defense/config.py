"""
Runtime settings (environment / .env driven)
"""
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load .env from multiple possible locations
env_paths = [
    Path(__file__).parent / ".env",  # Package folder (preferred)
    Path.cwd() / ".env",
    Path(__file__).parent.parent / ".env",
]
for env_path in env_paths:
    if env_path.exists():
        load_dotenv(env_path, override=True)
        break
else:
    load_dotenv()


class Settings(BaseSettings):
    """Numeric tolerances and limits shared by all services"""

    model_config = SettingsConfigDict(env_prefix="OPDEF_", extra="ignore")

    log_level: str = "INFO"

    # Schur stability margin: rho(A) must stay below 1 - tol_schur
    tol_schur: float = 1e-9

    # Power iteration
    power_max_iter: int = 100_000
    power_rel_tol: float = 1e-13
    power_residual_tol: float = 1e-10

    # Dense algebra
    dense_limit: int = 3000
    clamp_tol: float = 1e-12

    # Waterfilling
    secular_rtol: float = 1e-12
    breakpoint_rtol: float = 1e-11
    sat_rel_tol: float = 1e-9

    # Random graphs
    generator_retries: int = 100

    # Projected-gradient oracle
    oracle_max_iter: int = 50_000
    oracle_tol: float = 1e-9

    # Budget sweeps
    sweep_workers: int = 1

    # Extra invariant assertions (Perron bounds, order-swapped phi); enabled by the test suite
    check_invariants: bool = False

    # Stand-in for a zero lower bound (d must stay strictly positive)
    zero_floor_epsilon: float = 1e-8


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Cached settings instance"""
    return Settings()
