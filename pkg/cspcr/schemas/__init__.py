"""Schemas module - Pydantic DTOs."""
