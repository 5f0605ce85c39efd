"""
Numerical settings loaded from environment variables / .env file.
Every setting has a default; model spec files and CLI flags override them per run.
"""
import logging
import os
import sys
from dotenv import load_dotenv

load_dotenv()


def _number(key: str, default: str, cast=float):
    """Read a numeric env var or abort with a clear error message."""
    raw = os.getenv(key, default).strip()
    try:
        return cast(float(raw)) if cast is int else cast(raw)
    except ValueError:
        print(
            f"\n❌  INVALID ENV VAR: '{key}' = {raw!r}\n"
            f"    Expected a number; fix it in your shell or .env file.\n",
            file=sys.stderr,
        )
        sys.exit(1)


class _Settings:
    # ── Series summation ──────────────────────────────────────────────────────
    TAIL_REL_TOL: float     = _number("SHARP_TAIL_REL_TOL", "1e-10")
    MIN_LEVEL: int          = _number("SHARP_MIN_LEVEL", "64", int)
    MAX_LEVEL: int          = _number("SHARP_MAX_LEVEL", "0", int)   # 0 → derived from the point budget
    MAX_INDEX_POINTS: int   = _number("SHARP_MAX_INDEX_POINTS", "4000000", int)

    # ── Quadrature on R^d_+ ───────────────────────────────────────────────────
    QUAD_REL_TOL: float     = _number("SHARP_QUAD_REL_TOL", "1e-10")
    QUAD_NODES: int         = 20
    QUAD_MAX_PANELS: int    = 20_000
    QUAD_MAX_TENSOR_POINTS: int = 30_000_000

    # ── Optimisation over the h-simplex ───────────────────────────────────────
    OPT_RESTARTS: int       = _number("SHARP_OPT_RESTARTS", "8", int)
    OPT_MAX_EVALUATIONS: int = _number("SHARP_OPT_MAX_EVALUATIONS", "1200", int)
    GRID_RESOLUTION: int    = _number("SHARP_GRID_RESOLUTION", "64", int)
    GRID_MAX_POINTS: int    = _number("SHARP_GRID_MAX_POINTS", "20000", int)
    RAY_GROWTH: float       = _number("SHARP_RAY_GROWTH", "1e12")

    # ── Stechkin problem ──────────────────────────────────────────────────────
    BUDGET_CONVENTION: str  = os.getenv("SHARP_BUDGET_CONVENTION", "as-displayed")
    ROOT_REL_TOL: float     = 1e-13

    # ── Verification scans ────────────────────────────────────────────────────
    SEED: int               = _number("SHARP_SEED", "42", int)
    SCAN_LEVEL: int         = _number("SHARP_SCAN_LEVEL", "64", int)
    SOLYAR_GRID: int        = _number("SHARP_SOLYAR_GRID", str(2**14), int)
    THREADS: int            = _number("SHARP_THREADS", "1", int)

    LOG_LEVEL: str          = os.getenv("SHARP_LOG_LEVEL", "INFO")


settings = _Settings()


def configure_logging(level: str | None = None) -> None:
    """Root logger on stderr, so JSON on stdout stays byte-identical between runs."""
    logging.basicConfig(
        stream=sys.stderr,
        level=(level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
