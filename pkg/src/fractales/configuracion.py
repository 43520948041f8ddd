"""
Valores numéricos por defecto del paquete, centralizados en un único objeto.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

# Tolerancia geométrica para pertenencia a frontera
GEOM_EPS = 1e-12


@dataclass(frozen=True)
class Configuracion:
    """
    Parámetros por defecto de certificación, construcción y salida.
    """
    lam: float = 0.1
    tol: float = 1e-3
    n_max: int = 20
    budget: int = 1_000_000
    max_iter: int = 200
    resolucion_relativa: float = 1e-3
    tol_cont_relativa: float = 1e-6
    holgura_singleton: float = 1e-9
    factor_seguridad: float = 1.5
    margen_contraccion: float = 1e-9
    profundidad_subcopia: int = 8
    # Profundidades de las redes de los espacios registrados
    paso_intervalo: float = 1e-3
    profundidad_cantor: int = 7
    profundidad_triangulo: int = 7
    profundidad_alfombra: int = 4
    profundidad_koch: int = 5
    pixeles_por_unidad: int = 200
    semilla: int = 0

    def replace(self, **cambios) -> "Configuracion":
        return dataclasses.replace(self, **cambios)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULTS = Configuracion()


def tol_singleton(resolution: float, config: Configuracion = DEFAULTS) -> float:
    """Diámetro máximo admitido para una imagen que debería ser un punto."""
    return 2.0 * resolution + config.holgura_singleton


def tol_cont(diametro: float, config: Configuracion = DEFAULTS) -> float:
    return config.tol_cont_relativa * diametro + GEOM_EPS
