"""Domain types."""

from neflow.models.game import GameSpec, ProfileLayout
from neflow.models.graph import GraphSpec
from neflow.models.exosystem import Exosystem
from neflow.models.law import AgentLaw, LawVariant
from neflow.models.experiment import ExperimentConfig

__all__ = ["GameSpec", "ProfileLayout", "GraphSpec", "Exosystem", "AgentLaw", "LawVariant", "ExperimentConfig"]
