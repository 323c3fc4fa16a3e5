"""Feshbach-Villars bound states and resonances in a Coulomb-Sturmian basis."""

__version__ = "0.1.0"
