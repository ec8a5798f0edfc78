"""Services layer."""

from neflow.services.experiment import check_report, run_experiment

__all__ = ["run_experiment", "check_report"]
