"""Live teaching service: FastAPI app, session engine, wire models."""
