"""Strategy synthesis and analysis for MDPs with two unknown environments."""
from .errors import MemdpError
from .model import Memdp, Mdp, Objective, StrategyMachine, parse_memdp, parse_strategy

__version__ = "0.1.0"

__all__ = ["MemdpError", "Memdp", "Mdp", "Objective", "StrategyMachine", "parse_memdp", "parse_strategy"]
