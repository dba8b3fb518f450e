"""Hidden Markov model parameters for span denoising."""
import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from ocod_enhance.core.enums import EntityClass


OUTSIDE = "outside"
# State 0 is outside; states 1.. follow EntityClass order.
STATES: tuple[str, ...] = (OUTSIDE,) + tuple(e.value for e in EntityClass)
ABSTAIN = 0


def state_index(entity: EntityClass) -> int:
    return STATES.index(entity.value)


class HmmModel(BaseModel):
    """Initial, transition and per-rule emission probabilities.

    ``emission[r, s, o]`` is the probability that rule ``r`` emits observation
    ``o`` when the hidden state is ``s``; observation 0 means the rule abstained
    and observation ``k > 0`` is a vote for state ``k``.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rule_ids: tuple[str, ...]
    initial: np.ndarray
    transition: np.ndarray
    emission: np.ndarray
    log_likelihoods: tuple[float, ...] = ()

    @model_validator(mode="after")
    def check_stochastic(self) -> "HmmModel":
        k = len(STATES)
        if self.initial.shape != (k,) or self.transition.shape != (k, k):
            raise ValueError("initial/transition shapes do not match the state space")
        if self.emission.shape != (len(self.rule_ids), k, k):
            raise ValueError("emission must be (rules, states, observations)")
        for name, array in (("initial", self.initial), ("transition", self.transition), ("emission", self.emission)):
            if np.any(array < 0) or np.any(array > 1):
                raise ValueError(f"{name} probabilities must lie in [0, 1]")
        if abs(self.initial.sum() - 1) > 1e-9:
            raise ValueError("initial probabilities must sum to 1")
        if np.any(np.abs(self.transition.sum(axis=1) - 1) > 1e-9):
            raise ValueError("transition rows must sum to 1")
        if np.any(np.abs(self.emission.sum(axis=2) - 1) > 1e-9):
            raise ValueError("emission rows must sum to 1")
        return self
