"""
Registro de procedencia: un fichero de líneas JSON con una cabecera (fecha,
versión y tolerancias) y una línea por etapa de cada ejecución.
"""
from __future__ import annotations

import json
import logging
import os
from datetime import datetime

from .configuracion import DEFAULTS, Configuracion

logger = logging.getLogger(__name__)

# Carpeta de los registros de las órdenes que no dan --out ni --provenance
CARPETA_PROCEDENCIA = "Procedencia"


def default_provenance_path(command: str, out: str | None = None,
                            timestamp: bool = True) -> str:
    """
    Ruta del registro de una ejecución: junto a la salida si la hay y, si no,
    en Procedencia/<orden>_<fecha>.jsonl (sin fecha con timestamp=False).
    """
    if out:
        return f"{out}.procedencia.jsonl"
    os.makedirs(CARPETA_PROCEDENCIA, exist_ok=True)
    nombre = command
    if timestamp:
        nombre += "_" + datetime.now().strftime("%Y-%m-%d_%H-%M-%S")
    return os.path.join(CARPETA_PROCEDENCIA, nombre + ".jsonl")


def _serializable(valor):
    """Convierte lo que json no sabe escribir (arrays, infinitos...)."""
    if hasattr(valor, "tolist"):
        return valor.tolist()
    if hasattr(valor, "to_json"):
        return valor.to_json()
    if isinstance(valor, float) and valor != valor:
        return None
    return str(valor)


class Provenance:
    """
    Escritor del registro. Se usa como gestor de contexto o con close().

    Args:
        path: Fichero de salida; None para solo acumular en memoria.
        config: Configuración cuyos valores van en la cabecera.
        timestamp: Incluye la fecha en la cabecera.
    """

    def __init__(self, path=None, config: Configuracion = DEFAULTS, timestamp: bool = True):
        from . import __version__

        self.path = path
        self.records: list[dict] = []
        self._fichero = open(path, "w", encoding="utf-8") if path is not None else None
        cabecera = {"stage": "header", "package": "fractales", "version": __version__,
                    "config": config.as_dict()}
        if timestamp:
            cabecera["date"] = datetime.now().strftime("%Y-%m-%d_%H-%M-%S")
        self._escribir(cabecera)

    def _escribir(self, registro: dict) -> None:
        self.records.append(registro)
        if self._fichero is not None:
            self._fichero.write(json.dumps(registro, sort_keys=True, default=_serializable) + "\n")
            self._fichero.flush()

    def stage(self, name: str, **datos) -> None:
        """Añade la línea de una etapa."""
        logger.debug("Etapa %s", name)
        self._escribir({"stage": name, **datos})

    def close(self) -> None:
        if self._fichero is not None:
            self._fichero.close()
            self._fichero = None

    def __enter__(self) -> "Provenance":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_provenance(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(linea) for linea in f if linea.strip()]
