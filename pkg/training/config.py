import math
from dataclasses import dataclass
from typing import Optional

from django.db import models

from bnb.engine import NodeSelection, SolveConfig
from core.exceptions import InvalidConfig
from policy.network import HIDDEN
from treemdp.returns import temporal_returns, tree_returns


class Regime(models.TextChoices):
    TEMPORAL_MDP = 'mdp', 'MDP'
    TREE_DFS = 'tmdp-dfs', 'tMDP+DFS'
    TREE_OBJLIM = 'tmdp-objlim', 'tMDP+ObjLim'


@dataclass
class TrainConfig:
    regime: Regime = Regime.TREE_OBJLIM
    epochs: int = 300
    time_limit: Optional[float] = None
    entropy_bonus: float = 0.01
    learning_rate: float = 1e-3
    sample_rate: float = 0.2
    instances_per_epoch: int = 10
    seed: int = 0
    eval_interval: int = 10
    eval_seeds: int = 5
    baseline: bool = False
    episode_node_limit: Optional[int] = None
    hidden: int = HIDDEN
    workers: int = 1

    def validate(self, train_set=()):
        Regime(self.regime)
        in_range = {
            'epochs': self.epochs >= 0,
            'learning_rate': self.learning_rate > 0,
            'instances_per_epoch': self.instances_per_epoch >= 1,
            'eval_interval': self.eval_interval >= 1,
            'eval_seeds': self.eval_seeds >= 1,
            'hidden': self.hidden >= 1,
            'workers': self.workers >= 1,
            'entropy_bonus': self.entropy_bonus >= 0,
            'sample_rate': 0 < self.sample_rate <= 1,
        }
        bad = [name for name, ok in in_range.items() if not ok]
        if bad:
            raise InvalidConfig(f"out of range: {', '.join(bad)}")
        if self.time_limit is not None and self.time_limit <= 0:
            raise InvalidConfig("time_limit must be positive")
        if self.episode_node_limit is not None and self.episode_node_limit < 1:
            raise InvalidConfig("episode_node_limit must be at least 1")
        if Regime(self.regime) == Regime.TREE_OBJLIM:
            missing = [item.instance.name for item in train_set if item.optimum is None]
            if missing:
                raise InvalidConfig(
                    f"{len(missing)} training instances have no precomputed optimum "
                    f"(first: {missing[0]}); run presolve_optima first"
                )
        return self


@dataclass
class ImitationConfig:
    node_cap_per_instance: int = 200
    epochs: int = 20
    learning_rate: float = 1e-2
    batch_size: int = 32
    seed: int = 0
    hidden: int = HIDDEN

    def validate(self):
        if self.node_cap_per_instance < 1 or self.epochs < 0 or self.batch_size < 1 or self.hidden < 1:
            raise InvalidConfig("node cap, batch size and hidden size must be positive, epochs non-negative")
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise InvalidConfig("learning_rate must be positive")
        return self


def regime_solve_config(regime, rule, seed, optimum=None, node_limit=None):
    """Episode-collection solve settings; regimes differ only in node selection and objective limit."""
    regime = Regime(regime)
    return SolveConfig(
        branching_rule=rule,
        node_selection=NodeSelection.DFS_LEFT_FIRST if regime == Regime.TREE_DFS else NodeSelection.BEST_FIRST,
        objective_limit=optimum if regime == Regime.TREE_OBJLIM else None,
        node_limit=node_limit,
        rng_seed=seed,
    )


def regime_returns(regime):
    return temporal_returns if Regime(regime) == Regime.TEMPORAL_MDP else tree_returns
