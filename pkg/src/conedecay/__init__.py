"""Fourier decay of averaged measures on cones and cylinders over curved hypersurfaces."""

from .errors import ConeDecayError
from .fourier import DecayProfile, fit_exponent, ft, ft_ray, ray_profile
from .harness import ScenarioConfig, VerificationReport, run_all
from .measures import AveragedMeasure, ChartMeasure, ParticleMeasure
from .reparam import ReparamFamily, family_from_id
from .surfaces import QuadraticSignature, catalog_surface

__version__ = "0.1.0"

__all__ = [
    "AveragedMeasure",
    "ChartMeasure",
    "ConeDecayError",
    "DecayProfile",
    "ParticleMeasure",
    "QuadraticSignature",
    "ReparamFamily",
    "ScenarioConfig",
    "VerificationReport",
    "catalog_surface",
    "family_from_id",
    "fit_exponent",
    "ft",
    "ft_ray",
    "ray_profile",
    "run_all",
]
