"""
Fractales topológicos: atractores de IFS sobre redes finitas, certificados de
contracción topológica, pegado de sistemas y ladrillos autosemejantes.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .configuracion import DEFAULTS, Configuracion
from .errores import FractalError
from .geometria import PointCloud
from .aplicaciones import MapFamily, SelfMap
from .contraccion import ContractionCertificate, FractalSystem

__all__ = [
    "__version__",
    "DEFAULTS",
    "Configuracion",
    "FractalError",
    "PointCloud",
    "MapFamily",
    "SelfMap",
    "ContractionCertificate",
    "FractalSystem",
]
