"""Least-cost nutrient-adequate diets for households, with seasonality and
affordability analysis."""

__version__ = "0.1.0"
