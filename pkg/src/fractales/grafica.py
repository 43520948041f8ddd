"""
Salida gráfica de las redes de puntos: rásteres PGM (P5) escritos con numpy
y figuras PNG con matplotlib.
"""
from __future__ import annotations

import logging
import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.cm as cm
import matplotlib.pyplot as plt
import numpy as np

from .configuracion import DEFAULTS
from .errores import DimensionError, SpecFormatError
from .geometria import PointCloud, save_csv, save_json

logger = logging.getLogger(__name__)

FORMATOS = ("json", "csv", "pgm", "png")


def _plano(cloud: PointCloud) -> np.ndarray:
    """Coordenadas en el plano; las redes de la recta se dibujan sobre y = 0."""
    pts = cloud.points
    if cloud.dim == 1:
        return np.column_stack([pts[:, 0], np.zeros(len(pts))])
    if cloud.dim != 2:
        raise DimensionError(f"solo se dibujan redes de dimensión 1 o 2, no {cloud.dim}")
    return pts


def rasterize(cloud: PointCloud, pixels_per_unit: int = DEFAULTS.pixeles_por_unidad
              ) -> np.ndarray:
    """
    Imagen en escala de grises de la red: 0 en los píxeles con puntos y 255
    en el resto. La fila 0 es la de mayor y.

    Args:
        cloud: Red de dimensión 1 o 2.
        pixels_per_unit: Píxeles por unidad de longitud.

    Returns:
        Matriz uint8 (alto, ancho).
    """
    pts = _plano(cloud)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    ancho = max(1, int(math.ceil((hi[0] - lo[0]) * pixels_per_unit)) + 1)
    alto = max(1, int(math.ceil((hi[1] - lo[1]) * pixels_per_unit)) + 1)
    col = np.clip(np.floor((pts[:, 0] - lo[0]) * pixels_per_unit).astype(int), 0, ancho - 1)
    fila = np.clip(np.floor((hi[1] - pts[:, 1]) * pixels_per_unit).astype(int), 0, alto - 1)
    imagen = np.full((alto, ancho), 255, dtype=np.uint8)
    imagen[fila, col] = 0
    return imagen


def save_pgm(cloud: PointCloud, path, pixels_per_unit: int = DEFAULTS.pixeles_por_unidad) -> None:
    imagen = rasterize(cloud, pixels_per_unit)
    alto, ancho = imagen.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{ancho} {alto}\n255\n".encode("ascii"))
        f.write(imagen.tobytes())
    logger.debug("PGM de %dx%d píxeles en %s", ancho, alto, path)


def save_png(cloud: PointCloud, path, title: str | None = None) -> None:
    """
    Diagrama de dispersión de la red, coloreado por la primera coordenada.
    Sin metadatos de versión para que dos ejecuciones den el mismo fichero.
    """
    pts = _plano(cloud)
    fig, ax = plt.subplots(figsize=(6, 6))
    rango = np.ptp(pts[:, 0]) or 1.0
    colores = cm.viridis((pts[:, 0] - pts[:, 0].min()) / rango)
    ax.scatter(pts[:, 0], pts[:, 1], c=colores, s=1, marker=".", linewidths=0)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title or f"{len(pts)} puntos, resolución {cloud.resolution:.3g}")
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def save_cloud(cloud: PointCloud, path, fmt: str = "json",
               pixels_per_unit: int = DEFAULTS.pixeles_por_unidad) -> None:
    """Guarda la red en el formato pedido."""
    if fmt == "json":
        save_json(cloud, path)
    elif fmt == "csv":
        save_csv(cloud, path)
    elif fmt == "pgm":
        save_pgm(cloud, path, pixels_per_unit)
    elif fmt == "png":
        save_png(cloud, path)
    else:
        raise SpecFormatError(f"formato de salida desconocido: {fmt!r}")
    logger.info("Red de %d puntos guardada en %s (%s)", len(cloud), path, fmt)
