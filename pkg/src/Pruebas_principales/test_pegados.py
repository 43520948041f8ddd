"""
Pruebas de aceptación de la condición de los puntos y de los pegados, con
los sistemas de Sistemas/.
"""
import json
from pathlib import Path

import numpy as np
import pytest

from fractales.aplicaciones import family_from_json
from fractales.cli import space_from_json, system_from_json
from fractales.combinadores import glue_disjoint, glue_many, glue_symmetric
from fractales.geometria import region_from_json
from fractales.ladrillos import build_brick_interval

SISTEMAS = Path(__file__).resolve().parents[2] / "Sistemas"


def cargar(nombre: str) -> dict:
    with open(SISTEMAS / nombre, "r", encoding="utf-8") as f:
        return json.load(f)


def test_intervalo_mas_un_punto():
    datos = cargar("intervalo_y_punto.json")
    Y = system_from_json(datos["system"])
    Z = space_from_json(datos["target"])
    sistema = glue_disjoint(Y, Z, family_from_json(datos["bridge"]), datos["y0"],
                            datos["z0"], lam=0.1)
    ext = sistema.extension
    assert ext.singleton_checks
    assert all(d == 0.0 for _, _, d in ext.singleton_checks)
    assert ext.combined_depth == max(ext.n1, 2 * ext.n2, 2 * ext.n3)
    assert len(sistema.maps) == 3
    assert sistema.certificate.certified
    assert sistema.certificate.lam == 0.1


def test_intervalo_y_conjunto_de_cantor():
    datos = cargar("intervalo_y_cantor.json")
    intervalo, cantor = (system_from_json(d) for d in datos["systems"])
    sistema = glue_many([intervalo, cantor], lam=0.1)
    assert sistema.certificate.certified
    assert len(sistema.contracting) == 2 and len(sistema.collapsing) == 2
    pts = sistema.space.points[:, 0]
    assert pts.min() == pytest.approx(0.0) and pts.max() == pytest.approx(3.0, abs=1e-3)
    # Fuera de su mitad, cada aplicación es constante
    assert np.ptp(sistema.contracting[0](cantor.space.points)) == 0.0
    assert np.ptp(sistema.collapsing[1](intervalo.space.points)) == 0.0


def test_pegado_simetrico_con_un_punto_comun():
    datos = cargar("intervalo_y_cantor.json")
    intervalo = system_from_json(datos["systems"][0])
    trasladado = system_from_json({
        "maps": [{"type": "affine", "matrix": [["1/2"]], "offset": ["1/2"]},
                 {"type": "affine", "matrix": [["1/2"]], "offset": [1]}],
        "space": {"type": "interval", "a": 1, "b": 2, "step": "1/1000"},
    })
    sistema = glue_symmetric(intervalo, trasladado, lam=0.1)
    assert sistema.certificate.certified
    assert sistema.contracting[0]([[1.5]])[0, 0] == pytest.approx(0.5, abs=1e-3)


def test_sucesion_de_inversos():
    sistemas = [system_from_json(d) for d in cargar("sucesion_inversos.json")["systems"]]
    sistema = glue_many(sistemas, lam=0.1)
    assert sistema.certificate.certified
    assert sorted(sistema.space.points[:, 0].tolist()) == pytest.approx(
        [1 / n for n in range(5, 0, -1)])


def test_abierto_con_demasiadas_componentes():
    # El ladrillo sale del tramo más largo, (1/2, 1]: la cara en 1 está sobre
    # la frontera de [0, 1] y cuenta como parte del abierto relativo
    U = region_from_json(cargar("abierto_patologico.json")["region"])
    tramos = sorted((float(p.lo[0]), float(p.hi[0])) for p in U.parts)
    assert all(b < c for (_, b), (c, _) in zip(tramos, tramos[1:]))
    # [0, lo_1] y los huecos entre tramos
    componentes = len(tramos)
    assert componentes > 12
    ladrillo = build_brick_interval(U)
    pts = ladrillo.b_cloud.points[:, 0]
    h = ladrillo.ambient.resolution
    # Margen de dos pasos en el extremo 1/2 y ninguno en 1
    assert pts.min() == pytest.approx(0.5 + 2 * h)
    assert pts.max() == pytest.approx(1.0)
    assert ladrillo.contract.valid
