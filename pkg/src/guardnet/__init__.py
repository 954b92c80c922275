"""Guardnet: Admin / Intruder / No Human frame classifier."""

CLASS_NAMES = ("admin", "intruder", "no_human")
ANOMALY_CLASS = "intruder"

__all__ = ["ANOMALY_CLASS", "CLASS_NAMES"]
