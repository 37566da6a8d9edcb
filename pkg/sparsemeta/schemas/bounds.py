from pydantic import BaseModel, ConfigDict, Field, model_validator


class BoundInputs(BaseModel):
    """Constants of the generalization bounds; names follow the usual notation."""

    model_config = ConfigDict(frozen=True)

    B: float = Field(..., gt=0, description="Upper bound on the loss")
    G: float = Field(..., gt=0, description="Lipschitz constant of the loss in theta")
    H: float = Field(..., ge=0, description="Smoothness constant of the loss in theta")
    R: float = Field(..., gt=0, description="Radius of the parameter domain")
    eta: float = Field(..., ge=0, description="Inner learning rate")
    p: int = Field(..., ge=1, description="Total parameter count")
    k: int = Field(..., ge=1, description="Total kept parameters")
    M: int = Field(..., ge=1, description="Number of meta-training tasks")
    delta: float = Field(..., gt=0, lt=1, description="Failure probability")

    @model_validator(mode="after")
    def check_sparsity(self) -> "BoundInputs":
        if self.k > self.p:
            raise ValueError(f"k ({self.k}) must not exceed p ({self.p})")
        return self
