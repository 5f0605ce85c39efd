# Routes package: thin FastAPI wrappers over the shared runner.
from __future__ import annotations

import logging
from typing import Any

from fastapi import HTTPException, status

from app.core.errors import ModelSpecError, SharpConstError
from app.models.run import RunConfig
from app.services.records import plain
from app.services.runner import execute

logger = logging.getLogger(__name__)


def run_request(config: RunConfig) -> dict[str, Any]:
    """Run one command; ModelSpecError → 422, other library errors → 400."""
    try:
        outcome = execute(config)
    except ModelSpecError as exc:
        logger.info("rejected model spec: %s", exc)
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_CONTENT,
            detail={"message": exc.message, "field": exc.field, "line": exc.line},
        )
    except SharpConstError as exc:
        logger.info("rejected request: %s", exc)
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(exc))
    return {"exit_code": outcome.exit_code, **plain(outcome.record)}
