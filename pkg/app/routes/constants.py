# Constant routes: mean-squared, HLP, multiplicative and additive constants of one model.
from fastapi import APIRouter

from app.models.run import Command, ConstantRequest, RunConfig
from app.routes import run_request

router = APIRouter(tags=["Constants"])


@router.post("/constant", summary="Sharp constant of a model spec or preset")
def constant(body: ConstantRequest) -> dict:
    """
    `model` is a preset name or an inline spec mapping.
    Infinite constants come back with status 'infinite' or 'divergent' and exit_code 2.
    """
    config = RunConfig(command=Command.constant, model=body.model, mode=body.mode, h=body.h, lam=body.lam)
    return run_request(config)
