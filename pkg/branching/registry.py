"""``--brancher`` strings: random, strong, pseudocost[:η], policy:<path>, policy-greedy:<path>."""

import math

from core.exceptions import InvalidConfig
from policy.storage import load_policy

from .rules import PolicyRule, PseudocostRule, RandomRule, StrongBranchingRule

BRANCHER_HELP = 'random | strong | pseudocost[:reliability] | policy:<path> | policy-greedy:<path>'


def parse_brancher(spec):
    """Build a fresh rule from its spec string; policy files are loaded here."""
    name, _, arg = spec.partition(':')
    if name == 'random' and not arg:
        return RandomRule()
    if name == 'strong' and not arg:
        return StrongBranchingRule()
    if name == 'pseudocost':
        if not arg:
            return PseudocostRule()
        if arg == 'inf':
            return PseudocostRule(math.inf)
        try:
            reliability = int(arg)
        except ValueError:
            raise InvalidConfig(f"reliability '{arg}' is not an integer") from None
        if reliability < 0:
            raise InvalidConfig("reliability must be non-negative")
        return PseudocostRule(reliability)
    if name in ('policy', 'policy-greedy'):
        if not arg:
            raise InvalidConfig(f"'{name}' needs a policy file, e.g. {name}:policy.npz")
        return PolicyRule(load_policy(arg), greedy=name == 'policy-greedy', source=arg)
    raise InvalidConfig(f"unknown brancher '{spec}' (expected {BRANCHER_HELP})")
