"""FastAPI application implementing the embedding wire contract.

POST /embed  {"texts": [...], "max_length": int}
          -> {"dim": int, "vectors": [[...]], "model": str}
GET /health  -> {"model": str, "dim": int, "pooling": str, "batch_cap": int}

Responses preserve input order; identical texts yield identical vectors
within one process. Oversize batches get 413, malformed bodies 400.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

DEFAULT_BATCH_CAP = 64


class EmbedRequest(BaseModel):
    texts: list[str]
    max_length: int = Field(default=256, ge=1)


def create_app(encoder, batch_cap: int = DEFAULT_BATCH_CAP) -> FastAPI:
    app = FastAPI(title="embed-sidecar")

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/health")
    def health():
        return {
            "model": encoder.name,
            "dim": encoder.dim,
            "pooling": encoder.pooling,
            "batch_cap": batch_cap,
        }

    @app.post("/embed")
    def embed(req: EmbedRequest):
        if len(req.texts) > batch_cap:
            return JSONResponse(
                status_code=413,
                content={"error": f"batch of {len(req.texts)} exceeds cap {batch_cap}"},
            )
        vectors = encoder.encode(req.texts, max_length=req.max_length)
        return {
            "dim": encoder.dim,
            "vectors": vectors.tolist(),
            "model": encoder.name,
        }

    return app
