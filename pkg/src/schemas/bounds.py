from typing import Optional

from pydantic import BaseModel, ConfigDict, model_validator

from src.schemas.perturbations import ShiftClass
from src.util.errors import DomainError

# relative slack for floating point in the ordering checks
ORDER_RTOL = 1e-12


def _le(a: float, b: float) -> bool:
    return a <= b + ORDER_RTOL * max(1.0, abs(a), abs(b))


class TheoryBound(BaseModel):
    """
    A closed-form minimax risk value or bound pair. rate_only bounds carry unit
    constants and only describe a rate.
    """

    model_config = ConfigDict(frozen=True)

    problem: str
    shift_class: ShiftClass
    eps: float
    lower: Optional[float] = None
    upper: Optional[float] = None
    exact: Optional[float] = None
    rate_only: bool = False

    @model_validator(mode="after")
    def check_order(self):
        if self.lower is not None and self.upper is not None and not _le(self.lower, self.upper):
            raise DomainError(f"lower {self.lower} exceeds upper {self.upper}")
        if self.exact is not None:
            if self.lower is not None and not _le(self.lower, self.exact):
                raise DomainError(f"exact {self.exact} below lower {self.lower}")
            if self.upper is not None and not _le(self.exact, self.upper):
                raise DomainError(f"exact {self.exact} above upper {self.upper}")
        return self

    @classmethod
    def exact_value(cls, problem: str, shift_class: str, eps: float, value: float) -> "TheoryBound":
        return cls(problem=problem, shift_class=shift_class, eps=eps, lower=value, upper=value, exact=value)
