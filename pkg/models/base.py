"""
Base models for the simhammer simulator.
"""

from pydantic import BaseModel as PydanticBaseModel
from typing import Any, List


class BaseModel(PydanticBaseModel):
    """Base model with common configuration."""

    class Config:
        from_attributes = True
        use_enum_values = True
        validate_assignment = True
        extra = "forbid"


class CsvRecord(BaseModel):
    """Base class for records that serialize to one CSV row."""

    @classmethod
    def csv_header(cls) -> List[str]:
        """Column names, in output order."""
        raise NotImplementedError

    def csv_row(self) -> List[Any]:
        """Values matching ``csv_header``."""
        raise NotImplementedError
