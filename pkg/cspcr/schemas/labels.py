"""
Label assignment schema.
"""
from pydantic import BaseModel, ConfigDict, model_validator


class LabelAssignment(BaseModel):
    """Per-row ranks in [1, M+1] and labels in [1, L] with label = ceil(rank / K)."""

    model_config = ConfigDict(frozen=True)

    labels: tuple[int, ...]
    ranks: tuple[int, ...]
    k: int
    l: int  # noqa: E741

    @model_validator(mode="after")
    def validate_blocks(self) -> "LabelAssignment":
        if len(self.labels) != len(self.ranks):
            raise ValueError("labels and ranks differ in length")
        m_plus_one = self.k * self.l
        for rank, label in zip(self.ranks, self.labels, strict=True):
            if not 1 <= rank <= m_plus_one:
                raise ValueError(f"rank {rank} outside [1, {m_plus_one}]")
            if label != -(-rank // self.k):
                raise ValueError(f"label {label} does not match rank {rank} for K={self.k}")
        return self
