"""
Pruebas de los árboles de aplicaciones, la auditoría de continuidad y el
formato JSON de las familias.
"""
import math

import numpy as np
import pytest

from fractales.aplicaciones import (
    AUDITADA, FALLIDA, Affine, Compose, Constant, ConstantOutside, DistanceFunctional,
    Fold, Identity, MapFamily, MetricProjection, Piecewise, Polyline, apply, audit,
    compose_affine, empirical_lipschitz, family_from_json, family_image_clouds,
    image_cloud, make_constant_outside, map_from_json, parse_number, similarity,
)
from fractales.errores import DimensionError, ExtensionHypothesisError, SpecFormatError
from fractales.geometria import AxisBox, Ball, HalfPlane, PointCloud, grid_net, interval_net


def test_numeros_racionales_y_decimales():
    assert parse_number("1/3") == 1 / 3
    assert parse_number(" 0.25 ") == 0.25
    assert parse_number(2) == 2.0
    for malo in ("uno", "1/0", True, None):
        with pytest.raises(SpecFormatError):
            parse_number(malo)


def test_afin_y_su_inversa():
    f = similarity(0.5, [0.25, 0.0], 90.0)
    x = np.array([[0.3, -0.7]])
    assert f.lip == pytest.approx(0.5)
    assert np.allclose(f.inverse()(f(x)), x)


def test_composicion_de_afines():
    f = Affine([[0.5]], [0.0])
    g = Affine([[0.5]], [0.5])
    total = compose_affine([g, f])
    assert np.allclose(total([[1.0]]), g(f([[1.0]])))
    assert total.lip == pytest.approx(0.25)


def test_offset_incompatible():
    with pytest.raises(DimensionError):
        Affine([[1.0, 0.0]], [0.0, 0.0])


def test_composicion_con_dimensiones_incompatibles():
    with pytest.raises(DimensionError):
        Compose((Affine([[1.0]], [0.0]), Affine(np.eye(2), [0.0, 0.0])))


def test_pliegue_y_proyeccion():
    pliegue = Fold(HalfPlane([1.0, 0.0], 0.5))
    assert np.allclose(pliegue([[0.2, 1.0], [0.8, 1.0]]), [[0.8, 1.0], [0.8, 1.0]])
    proyeccion = MetricProjection(AxisBox([0, 0], [1, 1], closed=True))
    assert np.allclose(proyeccion([[2.0, -1.0]]), [[1.0, 0.0]])
    assert pliegue.lip == 1.0 and proyeccion.lip == 1.0


def test_proyeccion_sobre_region_no_convexa():
    with pytest.raises(TypeError):
        MetricProjection(HalfPlane([1.0, 0.0], 0.0))


def test_a_trozos_sin_auditar_no_tiene_cota():
    tienda = Piecewise(((AxisBox([0.0], [0.5], closed=True), Affine([[2.0]], [0.0])),),
                       Affine([[-2.0]], [2.0]))
    assert math.isinf(tienda.lip)
    auditada = audit(tienda, interval_net(0.0, 1.0, 1e-3))
    assert auditada.continuity == AUDITADA
    assert auditada.lip == pytest.approx(2.0)
    assert apply(auditada, [0.5])[0] == pytest.approx(1.0)


def test_auditoria_detecta_un_salto():
    escalon = Piecewise(((AxisBox([0.0], [0.5], closed=True), Constant([0.0], 1)),),
                        Constant([1.0], 1))
    auditada = audit(escalon, interval_net(0.0, 1.0, 1e-3))
    assert auditada.continuity == FALLIDA
    assert math.isinf(auditada.lip)


def test_constante_fuera_de_u():
    u = Ball([0.0, 0.0], 0.5)
    radial = DistanceFunctional([0.0, 0.0], 0.5)
    m = audit(ConstantOutside(u, radial, [1.0]), grid_net([-1, -1], [1, 1], 0.01))
    assert m.continuity == AUDITADA
    assert m.lip == pytest.approx(2.0)
    assert np.allclose(m([[0.9, 0.9], [0.1, 0.2]])[:, 0], [1.0, math.sqrt(0.05) / 0.5])
    salto = audit(ConstantOutside(u, Identity(2), [0.5, 0.0]), grid_net([-1, -1], [1, 1], 0.01))
    assert salto.continuity == FALLIDA


def test_extension_constante_exige_hipotesis():
    dominio = interval_net(0.0, 1.0, 0.01)
    u = AxisBox([0.2], [0.6])
    with pytest.raises(ExtensionHypothesisError):
        make_constant_outside(Identity(1), u, dominio)
    tienda = Piecewise(((AxisBox([0.2], [0.4], closed=True), Affine([[1.0]], [0.0])),
                        (AxisBox([0.4], [0.6], closed=True), Affine([[-1.0]], [0.8]))),
                       Constant([0.2], 1))
    extendida = make_constant_outside(audit(tienda, dominio), AxisBox([0.15], [0.65]),
                                      dominio)
    assert extendida([[0.9]])[0, 0] == pytest.approx(0.2)
    assert extendida([[0.3]])[0, 0] == pytest.approx(0.3)


def test_funcional_distancia_y_poligonal():
    d = DistanceFunctional([0.0, 0.0], 2.0)
    assert d([[3.0, 4.0]])[0, 0] == pytest.approx(2.5)
    assert d.lip == pytest.approx(0.5)
    camino = Polyline([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    assert np.allclose(camino([[0.5], [0.75], [2.0]]), [[1.0, 0.0], [1.0, 0.5], [1.0, 1.0]])
    assert camino.lip == pytest.approx(2.0)


def test_lipschitz_empirico_no_supera_la_cota():
    f = similarity(0.5, [0.1, 0.2], 30.0)
    red = grid_net([0, 0], [1, 1], 0.05)
    assert empirical_lipschitz(f, red) <= f.lip + 1e-12
    assert empirical_lipschitz(f, red) == pytest.approx(0.5)


def test_imagen_de_una_red():
    red = interval_net(0.0, 1.0, 0.1)
    imagen = image_cloud(Affine([[0.5]], [0.0]), red)
    assert imagen.resolution == pytest.approx(0.5 * red.resolution)
    constante = image_cloud(Constant([3.0], 1), red)
    assert len(constante) == 1 and constante.resolution == 0.0


def test_imagenes_comparten_el_nodo_interior():
    red = interval_net(0.0, 1.0, 0.01)
    interior = Affine([[0.5]], [0.0])
    familia = [Compose((Affine([[1.0]], [k]), interior)) for k in range(3)]
    nubes = family_image_clouds(familia, red)
    for k, nube in enumerate(nubes):
        assert np.allclose(np.sort(nube.points[:, 0]), np.sort(0.5 * red.points[:, 0] + k))


def test_familia_desde_json():
    familia = family_from_json({"label": "F", "maps": [
        {"type": "affine", "matrix": [["1/3"]], "offset": [0]},
        {"type": "compose", "chain": [
            {"type": "affine", "matrix": [[1]], "offset": ["2/3"]},
            {"type": "affine", "matrix": [["1/3"]], "offset": [0]},
        ]},
    ]})
    assert len(familia) == 2
    assert familia.alpha == pytest.approx(1 / 3)
    assert familia[1]([[1.0]])[0, 0] == pytest.approx(1.0)
    reconstruida = map_from_json(familia[1].to_json())
    assert reconstruida([[0.5]])[0, 0] == pytest.approx(familia[1]([[0.5]])[0, 0])


def test_json_mal_formado():
    with pytest.raises(SpecFormatError):
        family_from_json({"label": "F"})
    with pytest.raises(SpecFormatError):
        map_from_json({"matrix": [[1]]})
    with pytest.raises(SpecFormatError):
        map_from_json({"type": "affine", "matrix": [[1]]})
    with pytest.raises(SpecFormatError):
        map_from_json({"type": "fold", "axis": {"type": "ball", "center": [0, 0], "radius": 1}})


def test_familia_con_dimensiones_mezcladas():
    with pytest.raises(DimensionError):
        MapFamily((Identity(1), Identity(2)))
