"""
Pruebas de la condición de los puntos, los pegados y los continuos de rejilla.
"""
import math

import numpy as np
import pytest

from fractales.aplicaciones import Affine, Constant, MapFamily
from fractales.combinadores import (
    ExtensionCertificate, GridContinuum, carve_open_set, check_condition_bang,
    collapsing_letters, glue_disjoint, glue_many, glue_wedge, peano_decompose,
    uniform_continuity_radius,
)
from fractales.contraccion import FractalSystem, verify_fractal
from fractales.errores import (
    ContractionMissingError, DecompositionError, EmptyInteriorError, GlueError,
    SingletonCheckError,
)
from fractales.geometria import AxisBox, PointCloud, interval_net


def mitades():
    return MapFamily((Affine([[0.5]], [0.0]), Affine([[0.5]], [0.5])), "F")


def sistema_intervalo(a=0.0, paso=1e-3):
    F = MapFamily((Affine([[0.5]], [a / 2]), Affine([[0.5]], [a / 2 + 0.5])), "F")
    return verify_fractal(FractalSystem(interval_net(a, a + 1.0, paso), F), 0.1)


def test_letras_colapsantes():
    X = interval_net(0.0, 1.0, 1e-3)
    familia = mitades().maps + (Constant([0.5], 1),)
    assert collapsing_letters(familia, X) == [2]


def test_radio_de_continuidad_uniforme():
    X = interval_net(0.0, 1.0, 1e-3)
    assert uniform_continuity_radius([Affine([[2.0]], [0.0])], X, 0.1) == pytest.approx(0.05)
    assert math.isinf(uniform_continuity_radius([Constant([0.0], 1)], X, 0.1))


def test_condicion_sin_aplicaciones_colapsantes():
    X = interval_net(0.0, 1.0, 1e-3)
    ext = check_condition_bang(mitades(), MapFamily((), "P"), X, 0.1)
    assert (ext.n1, ext.n2, ext.n3) == (4, 0, 0)
    assert ext.combined_depth == 4


def test_condicion_con_una_aplicacion_constante():
    X = interval_net(0.0, 1.0, 1e-3)
    ext = check_condition_bang(mitades(), MapFamily((Constant([0.5], 1),), "P"), X, 0.1)
    assert ext.n2 == 1
    assert ext.combined_depth == max(ext.n1, 2 * ext.n2, 2 * ext.n3)
    assert all(d == 0.0 for _, _, d in ext.singleton_checks)
    assert ext.to_json()["singleton_checks_total"] == 3


def test_condicion_con_imagen_no_puntual():
    X = interval_net(0.0, 1.0, 1e-3)
    with pytest.raises(SingletonCheckError) as info:
        check_condition_bang(mitades(), MapFamily((Affine([[0.5]], [0.0]),), "P"), X, 0.1)
    assert info.value.p_index == 0
    assert info.value.diameter > 0.1


def test_condicion_sin_contraccion():
    X = interval_net(0.0, 1.0, 1e-2)
    identidad = MapFamily((Affine([[1.0]], [0.0]),), "F")
    with pytest.raises(ContractionMissingError):
        check_condition_bang(identidad, MapFamily((), "P"), X, 0.1, n_max=5)


def test_peores_comprobaciones_por_aplicacion():
    ext = ExtensionCertificate(1, 1, 1, 0.1, 0.1, 2,
                               ((0, 0, 0.0), (1, 0, 1e-12), (0, 1, 0.0)), 1e-9)
    assert ext.worst_checks() == [(1, 0, 1e-12), (0, 1, 0.0)]


def test_pegado_disjunto_exige_conjuntos_disjuntos():
    Y = sistema_intervalo()
    Z = interval_net(1.0, 2.0, 1e-3)
    puente = MapFamily((Affine([[1.0]], [1.0]),), "P")
    with pytest.raises(GlueError):
        glue_disjoint(Y, Z, puente, [0.0], [2.0])


def test_pegado_disjunto_exige_cubrir_z():
    Y = sistema_intervalo()
    Z = PointCloud([[2.0], [3.0]])
    with pytest.raises(GlueError):
        glue_disjoint(Y, Z, MapFamily((Constant([2.0], 1),), "P"), [0.0], [2.0])


def test_pegado_por_un_punto():
    Y = sistema_intervalo()
    Z = interval_net(1.0, 2.0, 1e-3)
    puente = MapFamily((Affine([[1.0]], [1.0]),), "P")
    sistema = glue_wedge(Y, Z, puente, [1.0], lam=0.1)
    assert sistema.certificate.certified
    assert len(sistema.contracting) == 2 and len(sistema.collapsing) == 1
    assert sistema.space.points.min() == 0.0 and sistema.space.points.max() == 2.0
    assert sistema.contracting[0]([[1.7]])[0, 0] == pytest.approx(0.5)


def test_pegado_por_un_punto_sin_contacto():
    Y = sistema_intervalo()
    with pytest.raises(GlueError):
        glue_wedge(Y, PointCloud([[3.0]]), MapFamily((Constant([3.0], 1),), "P"), [1.0])


def test_pegado_de_varios_que_se_cortan_demasiado():
    a = sistema_intervalo(0.0)
    b = sistema_intervalo(0.5)
    with pytest.raises(GlueError):
        glue_many([a, b])


def test_continuo_no_conexo():
    with pytest.raises(DecompositionError):
        GridContinuum.squares([(0, 0), (2, 0)], 1.0)


def test_componentes_de_celdas():
    X = GridContinuum(tuple(((i, 0), (0, 1)) for i in (0, 1, 3, 5, 4)), 1.0, 2,
                      check_connected=False)
    # Celdas ordenadas: (0,0) (1,0) (3,0) (4,0) (5,0)
    assert X.components() == [[0, 1], [2, 3, 4]]
    # Un vértice común basta
    assert len(GridContinuum.squares([(0, 0), (1, 1)], 1.0).components()) == 1


def test_rejilla_de_aristas():
    X = GridContinuum.wireframe(2, 2, 0.5)
    assert len(X.cells) == 12
    assert len(X.cloud(0.25)) == 9 + 12
    assert X.contains([[0.25, 0.0], [0.25, 0.25]]).tolist() == [True, False]
    assert X.diameter() == pytest.approx(math.sqrt(2.0))
    fina = X.refine(2)
    assert len(fina.cells) == 24 and fina.scale == 0.25


def test_continuo_desde_json():
    X = GridContinuum.from_json({"scale": "1/12", "wireframe": [12, 12]})
    assert len(X.cells) == 2 * 12 * 13
    Y = GridContinuum.from_json({"scale": 1, "cells": [[0, 0], [1, 0]]})
    assert Y.to_json()["cells"] == [[0, 0], [1, 0]]


def test_descomposicion_de_peano():
    X = GridContinuum.squares([(i, j) for i in range(4) for j in range(4)], 0.25)
    eps = 0.6
    trozos = peano_decompose(X, eps)
    assert sum(len(t.cells) for t in trozos) == len(X.cells)
    assert all(t.diameter() < eps for t in trozos)
    with pytest.raises(DecompositionError):
        peano_decompose(X, 0.3)


def test_abierto_tallado_dentro_de_a():
    X = GridContinuum.wireframe(12, 12, 1 / 12)
    A = AxisBox([0.0, 0.0], [1.0, 0.0], closed=True)
    corte = carve_open_set(X, A)
    muestra = corte.core.cloud(X.scale / 8).points
    dentro = muestra[corte.u.contains(muestra)]
    assert len(dentro) > 0
    assert A.contains(dentro).all()
    for trozo in corte.pieces:
        assert not corte.u.contains(trozo.cloud(X.scale / 8).points).any()


def test_a_sin_interior():
    X = GridContinuum.wireframe(2, 2, 0.5)
    with pytest.raises(EmptyInteriorError):
        carve_open_set(X, AxisBox([0.3, 0.3], [0.3, 0.3], closed=True))
