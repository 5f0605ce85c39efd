# Verification routes: seeded random scans against computed constants.
from fastapi import APIRouter, HTTPException, status

from app.models.run import Command, RunConfig, VerifyKind, VerifyRequest
from app.routes import run_request

router = APIRouter(prefix="/verify", tags=["Verify"])


@router.post("/{kind}", summary="Random violation scan (taikov, hlp) or Solyar scan")
def verify(kind: VerifyKind, body: VerifyRequest) -> dict:
    if kind != VerifyKind.solyar and body.model is None:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"'{kind.value}' needs a model")
    config = RunConfig(
        command=Command.verify,
        kind=kind,
        model=body.model,
        h=body.h,
        trials=body.trials,
        seed=body.seed,
        p=body.p,
        k=body.k,
        harmonic=body.harmonic,
    )
    return run_request(config)
