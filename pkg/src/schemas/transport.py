from pydantic import BaseModel, Field


class CouplingCostReport(BaseModel):
    """
    Empirical E||X' - X||^2 of the coupling a perturbation induces, compared
    with its budget eps^2.
    """

    mean_sq_displacement: float
    std_error: float
    trials: int = Field(ge=1)
    budget: float = Field(ge=0.0)
    within_budget: bool
