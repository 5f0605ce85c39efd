# Stechkin routes: best approximation error for one or more budgets.
from fastapi import APIRouter, HTTPException, status

from app.models.run import Command, RunConfig, StechkinRequest
from app.routes import run_request

router = APIRouter(tags=["Stechkin"])


@router.post("/stechkin", summary="μ and E_N for the given budgets")
def stechkin(body: StechkinRequest) -> dict:
    if not body.budgets and not body.grid:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail="give 'budgets' or 'grid'")
    config = RunConfig(
        command=Command.stechkin,
        model=body.model,
        budgets=body.budgets,
        grid=body.grid,
        convention=body.convention,
        lower_level=body.lower_level,
    )
    return run_request(config)
