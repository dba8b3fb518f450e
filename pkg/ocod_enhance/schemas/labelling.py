"""Labelling schemas: rules, spans and token lattices."""
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ocod_enhance.core.enums import EntityClass
from ocod_enhance.schemas.register import TitleRecord


GOLD = "gold"
DENOISED = "denoised"


class LabelRule(BaseModel):
    """A regex labelling function; the whole match is the labelled span."""
    model_config = ConfigDict(frozen=True)

    rule_id: str = Field(min_length=1)
    entity: EntityClass
    pattern: str = Field(min_length=1)
    priority: int = 0


class Span(BaseModel):
    """A half-open character range ``[start, end)`` carrying one entity class."""
    model_config = ConfigDict(frozen=True)

    start: int = Field(ge=0)
    end: int
    entity: EntityClass
    source_rule: str = GOLD
    priority: int = 0

    @model_validator(mode="after")
    def check_order(self) -> "Span":
        if self.end <= self.start:
            raise ValueError(f"span end {self.end} must exceed start {self.start}")
        return self

    @property
    def length(self) -> int:
        return self.end - self.start

    @property
    def key(self) -> tuple[int, int, EntityClass]:
        return (self.start, self.end, self.entity)

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end

    def text(self, address: str) -> str:
        return address[self.start:self.end]


class LabelledAddress(BaseModel):
    """Address text plus entity spans, possibly overlapping before denoising."""
    model_config = ConfigDict(frozen=True)

    title_number: str
    address_text: str
    spans: tuple[Span, ...] = ()
    record: Optional[TitleRecord] = None

    @model_validator(mode="after")
    def check_bounds(self) -> "LabelledAddress":
        size = len(self.address_text)
        for span in self.spans:
            if span.end > size:
                raise ValueError(f"span {span.start}:{span.end} exceeds address length {size}")
        return self

    def sorted_spans(self) -> list[Span]:
        return sorted(self.spans, key=lambda s: (s.start, s.end, s.entity.value))

    def is_non_overlapping(self) -> bool:
        ordered = self.sorted_spans()
        return all(a.end <= b.start for a, b in zip(ordered, ordered[1:]))

    def with_spans(self, spans: list[Span]) -> "LabelledAddress":
        return self.model_copy(update={"spans": tuple(sorted(spans, key=lambda s: (s.start, s.end)))})


class Token(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str
    start: int
    end: int


class TokenLattice(BaseModel):
    """Tokens of one address and, per token, the (rule_id, class) votes it received.

    Tokens with no vote are implicitly voted outside.
    """
    model_config = ConfigDict(frozen=True)

    title_number: str = ""
    tokens: tuple[Token, ...] = ()
    votes: tuple[tuple[tuple[str, EntityClass], ...], ...] = ()

    @model_validator(mode="after")
    def check_alignment(self) -> "TokenLattice":
        if len(self.votes) != len(self.tokens):
            raise ValueError("one vote list per token is required")
        for left, right in zip(self.tokens, self.tokens[1:]):
            if right.start < left.end:
                raise ValueError("tokens must be ordered and non-overlapping")
        return self

    def __len__(self) -> int:
        return len(self.tokens)
