# Catalog routes: preset model specs.
from fastapi import APIRouter, HTTPException, status

from app.models.run import CatalogAction, Command, RunConfig
from app.routes import run_request
from app.services.presets import PRESETS

router = APIRouter(prefix="/catalog", tags=["Catalog"])


@router.get("", summary="Preset names, families and descriptions")
def list_presets() -> dict:
    return run_request(RunConfig(command=Command.catalog, action=CatalogAction.list))


@router.get("/{name}", summary="One preset spec")
def show_preset(name: str) -> dict:
    if name not in PRESETS:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"no preset named {name!r}")
    return run_request(RunConfig(command=Command.catalog, action=CatalogAction.show, name=name))
