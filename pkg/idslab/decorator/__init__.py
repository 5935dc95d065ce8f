from .experiment_decorator import EXPERIMENTS, experiment

__all__ = ["EXPERIMENTS", "experiment"]
