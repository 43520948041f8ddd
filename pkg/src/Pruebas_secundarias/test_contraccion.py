"""
Pruebas del operador de Hutchinson, los atractores y los certificados de
contracción topológica.
"""
import itertools
import json
import math

import numpy as np
import pytest

from fractales.aplicaciones import Affine, Constant, Identity, MapFamily
from fractales.contraccion import (
    CERTIFICADO, REFUTADO, FractalSystem, address_net, analytic_certify, analytic_depth,
    attractor, certify_between, certify_on_subdomain, enumerative_certify, hutchinson,
    iterate_hutchinson, verify_fractal,
)
from fractales.errores import (
    AnalyticInapplicableError, BudgetExceeded, ConvergenceError, MeshError,
    NotAFractalError, NotAnIFSError, SandwichError,
)
from fractales.geometria import PointCloud, diameter_of, hausdorff_distance, interval_net


def mitades():
    return MapFamily((Affine([[0.5]], [0.0]), Affine([[0.5]], [0.5])), "mitades")


def cantor():
    return MapFamily((Affine([[1 / 3]], [0.0]), Affine([[1 / 3]], [2 / 3])), "cantor")


def test_hutchinson_de_un_punto():
    imagen = hutchinson(mitades(), PointCloud([[0.0]]))
    assert sorted(imagen.points[:, 0]) == [0.0, 0.5]


def test_ley_de_convergencia_de_la_iteracion():
    eps = 1e-3
    distancias = [d for _, d in itertools.islice(
        iterate_hutchinson(cantor(), PointCloud([[0.0]]), eps), 8)]
    for anterior, siguiente in zip(distancias, distancias[1:]):
        assert siguiente <= anterior / 3 + 4 * eps


def test_atractor_del_conjunto_de_cantor():
    A = attractor(cantor(), PointCloud([[0.0]]), 1e-3)
    oraculo = address_net(cantor(), PointCloud([[0.0], [1.0]], 0.5), 9)
    assert A.resolution >= 1e-3
    assert hausdorff_distance(A, oraculo) <= 2e-3 + oraculo.resolution
    assert A.points.min() >= -1e-12 and A.points.max() <= 1 + 1e-12


def test_atractor_de_constantes_en_una_iteracion():
    F = MapFamily((Constant([0.7], 1),))
    A = attractor(F, PointCloud([[0.0], [5.0]]), 1e-3, max_iter=1)
    assert A.points.tolist() == [[0.7]]


def test_atractor_exige_un_ifs():
    with pytest.raises(NotAnIFSError):
        attractor(MapFamily((Identity(1),)), PointCloud([[0.0]]), 1e-3)


def test_atractor_sin_converger():
    with pytest.raises(ConvergenceError) as info:
        attractor(mitades(), PointCloud([[0.0]]), 1e-9, max_iter=2)
    assert info.value.iterations == 2
    assert info.value.last_distance > 0


def test_red_por_direcciones():
    red = address_net(cantor(), PointCloud([[0.0], [1.0]], 0.5), 3)
    assert len(red) == 16
    assert red.resolution == pytest.approx(0.5 / 27)


def test_profundidad_analitica():
    assert analytic_depth(mitades(), 1.0, 0.1) == 4
    assert analytic_depth(cantor(), 1.0, 0.1) == 3
    with pytest.raises(AnalyticInapplicableError):
        analytic_depth(MapFamily((Identity(1),)), 1.0, 0.1)


def test_certificado_analitico():
    cert = analytic_certify(mitades(), interval_net(0.0, 1.0, 1e-3), 0.1)
    assert cert.certified and cert.method == "analytic"
    assert cert.depth_n == 4


def test_certificado_enumerativo_de_las_mitades():
    X = interval_net(0.0, 1.0, 1e-3)
    cert = enumerative_certify(mitades(), X, 0.1)
    assert cert.verdict == CERTIFICADO
    assert cert.depth_n == 4
    assert cert.max_observed_diameter == pytest.approx(0.0625, abs=2 * X.resolution)
    assert cert.words_visited == 2 + 4 + 8 + 16


def test_la_identidad_no_contrae():
    cert = enumerative_certify(MapFamily((Identity(1),)), interval_net(0.0, 1.0, 0.01), 0.1,
                               n_max=6)
    assert not cert.certified
    assert cert.verdict == REFUTADO
    assert cert.to_json()["verdict"] == "refuted_up_to_depth(6)"
    assert cert.witness == (0,) * 6


def test_presupuesto_agotado_con_certificado_parcial():
    with pytest.raises(BudgetExceeded) as info:
        enumerative_certify(mitades(), interval_net(0.0, 1.0, 1e-4), 1e-3, budget=50)
    parcial = info.value.partial
    assert parcial.verdict == REFUTADO
    assert parcial.words_visited == 50


def test_malla_por_debajo_de_la_resolucion():
    with pytest.raises(MeshError):
        enumerative_certify(mitades(), interval_net(0.0, 1.0, 0.1), 0.05)


def test_letras_puntuales_no_cambian_el_veredicto():
    familia = MapFamily(mitades().maps + (Constant([0.5], 1),))
    X = interval_net(0.0, 1.0, 1e-3)
    sin_poda = enumerative_certify(familia, X, 0.1)
    con_poda = enumerative_certify(familia, X, 0.1, singleton_letters=[2])
    assert sin_poda.verdict == con_poda.verdict == CERTIFICADO
    assert sin_poda.depth_n == con_poda.depth_n == 4


def test_certificado_en_json_es_estable():
    cert = enumerative_certify(mitades(), interval_net(0.0, 1.0, 1e-3), 0.1)
    datos = json.loads(cert.dumps())
    assert datos["verdict"] == "certified"
    assert datos["lambda"] == 0.1
    assert cert.dumps() == enumerative_certify(mitades(), interval_net(0.0, 1.0, 1e-3),
                                               0.1).dumps()


def test_subdominio_entre_la_imagen_y_el_espacio():
    F = mitades()
    X = interval_net(0.0, 1.0, 1e-3)
    cert_x, cert_y = certify_on_subdomain(F, X, X, 0.1)
    assert cert_x.verdict == cert_y.verdict
    Z = certify_between(F, X, hutchinson(F, X), 0.1)
    assert Z.certified


def test_subdominio_que_no_contiene_la_imagen():
    F = mitades()
    X = interval_net(0.0, 1.0, 1e-3)
    with pytest.raises(SandwichError):
        certify_on_subdomain(F, X, interval_net(0.0, 0.4, 1e-3), 0.1)


def test_verificacion_de_un_fractal():
    sistema = verify_fractal(FractalSystem(interval_net(0.0, 1.0, 1e-3), mitades()), 0.1)
    assert sistema.certificate.certified
    assert sistema.to_json()["certificate"]["depth_n"] == 4


def test_espacio_que_no_es_union_de_imagenes():
    with pytest.raises(NotAFractalError) as info:
        verify_fractal(FractalSystem(interval_net(0.0, 1.0, 1e-3), cantor()), 0.1)
    assert 1 / 3 < float(np.ravel(info.value.witness)[0]) < 2 / 3
    assert info.value.distance > 0.1


def test_oraculo_exhaustivo_del_certificado():
    F = cantor()
    X = address_net(F, PointCloud([[0.0], [1.0]], 0.5), 6)
    cert = enumerative_certify(F, X, 0.1)
    profundidad = cert.depth_n
    for w in itertools.product(range(len(F)), repeat=profundidad):
        pts = X.points
        for i in reversed(w):
            pts = F[i](pts)
        assert diameter_of(pts) < 0.1
    assert math.isclose(cert.max_observed_diameter, 3.0 ** -profundidad, abs_tol=1e-12)
