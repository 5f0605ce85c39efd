import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.core.config import configure_logging, settings
from app.routes.catalog import router as catalog_router
from app.routes.constants import router as constants_router
from app.routes.stechkin import router as stechkin_router
from app.routes.verify import router as verify_router
from app.services.presets import preset_names

logger = logging.getLogger(__name__)


# Startup and shutdown logic
@asynccontextmanager
async def lifespan(app: FastAPI):
    configure_logging()
    logger.info("Sharp constants API up: %d presets, %d worker threads.", len(preset_names()), settings.THREADS)
    yield
    logger.info("Shutting down.")

app = FastAPI(
    title="Sharp Constants API",
    description="Sharp constants of Taikov, HLP, Stechkin and Solyar type inequalities",
    version="1.0.0",
    lifespan=lifespan,
)

# CORS configuration
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Routes
app.include_router(constants_router)
app.include_router(stechkin_router)
app.include_router(verify_router)
app.include_router(catalog_router)

@app.get("/")
def root():
    return {"app": "sharpconst", "status": "active"}

@app.get("/health")
def health_check():
    return {"status": "ok"}
