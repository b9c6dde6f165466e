"""
Experiment Interfaces - orchestration contracts
"""
from abc import ABC, abstractmethod

from .models import ExperimentConfig, ExperimentOutcome


class IExperimentService(ABC):
    """
    Interface for end-to-end experiment runs
    """

    @abstractmethod
    def run_subcommand(self, name: str, config: ExperimentConfig) -> ExperimentOutcome:
        """Run one subcommand and export its artifacts"""
        pass
