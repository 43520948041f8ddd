"""
Pruebas del registro de espacios, la búsqueda de sub-copias y los ladrillos.
"""
import math

import numpy as np
import pytest

from fractales import ladrillos
from fractales.aplicaciones import Compose
from fractales.configuracion import DEFAULTS
from fractales.errores import PhiContractError, SpecFormatError, SubcopyError
from fractales.geometria import AxisBox, Ball, diameter
from fractales.ladrillos import (
    ESPACIOS, PhiContract, beta_bound, build_brick, build_brick_interval,
    build_brick_singleton, certify_self_regenerating, derive_families, find_subcopy,
    promote_phi, registry_hull, registry_ifs, registry_net,
)


@pytest.mark.parametrize("nombre", [e for e in ESPACIOS if e != "singleton"])
def test_redes_del_registro_dentro_de_la_envolvente(nombre):
    red = registry_net(nombre, DEFAULTS, 3 if nombre != "interval" else None)
    envolvente = registry_hull(nombre)
    assert (envolvente.signed_distance(red.points) <= 1e-9).all()
    assert registry_ifs(nombre).alpha < 1.0


def test_espacio_desconocido():
    for funcion in (registry_ifs, registry_hull, registry_net):
        with pytest.raises(SpecFormatError):
            funcion("esfera")
    with pytest.raises(SpecFormatError):
        build_brick("esfera", Ball([0.0], 1.0))


def test_subcopia_de_cantor_en_el_borde():
    F = registry_ifs("cantor")
    X = registry_net("cantor", DEFAULTS, 4)
    w = find_subcopy(F, X, AxisBox([0.0], [0.2]), registry_hull("cantor"))
    assert w == (0, 0)


def test_subcopia_sin_envolvente_no_acepta_el_borde():
    F = registry_ifs("cantor")
    X = registry_net("cantor", DEFAULTS, 4)
    w = find_subcopy(F, X, AxisBox([0.0], [0.2]))
    assert len(w) > 2 and w[0] == 0


def test_subcopia_vacia_cuando_u_contiene_todo():
    F = registry_ifs("sierpinski-triangle")
    X = registry_net("sierpinski-triangle", DEFAULTS, 3)
    assert find_subcopy(F, X, Ball([0.5, 0.3], 2.0)) == ()


def test_u_demasiado_fino():
    F = registry_ifs("cantor")
    X = registry_net("cantor", DEFAULTS, 4)
    with pytest.raises(SubcopyError):
        find_subcopy(F, X, AxisBox([0.5], [0.5001]), max_depth=6)
    with pytest.raises(SubcopyError):
        build_brick_interval(AxisBox([0.5], [0.5005]))


def test_contrato_de_phi():
    bueno = PhiContract(0.0, 0.0, 2.0, 2.0, 1e-3, 1e-3)
    assert bueno.valid
    bueno.check()
    with pytest.raises(PhiContractError) as info:
        PhiContract(0.5, 0.0, 2.0, 2.0, 1e-3, 1e-3).check()
    assert info.value.defect == "surjectivity_defect"
    with pytest.raises(PhiContractError) as info:
        PhiContract(0.0, 0.5, 2.0, 2.0, 1e-3, 1e-3).check()
    assert info.value.defect == "collapse_defect"
    assert PhiContract(0.0, 0.0, float("inf"), 1.0, 1e-3, 1e-3).to_json()["lip_on_B"] is None


def test_ladrillo_del_intervalo():
    ladrillo = build_brick_interval(AxisBox([0.2], [0.6]))
    pts = ladrillo.b_cloud.points[:, 0]
    a, b = pts.min(), pts.max()
    assert a == pytest.approx(0.201) and b == pytest.approx(0.599)
    assert ladrillo.address is None
    assert len(ladrillo.F) == 2 and len(ladrillo.P) == 2
    assert ladrillo.contract.valid
    assert ladrillo.to_json()["b_bounds"] == [[a], [b]]


def test_beta_y_familias_derivadas_del_intervalo():
    ladrillo = build_brick_interval(AxisBox([0.2], [0.6]))
    promovidas = promote_phi(ladrillo)
    assert all(isinstance(m, Compose) and m.chain[-1] is ladrillo.phi for m in promovidas)
    beta, empirica = beta_bound(ladrillo)
    assert beta == pytest.approx(1.0) and not empirica
    familias = derive_families(ladrillo)
    assert familias.k == 1
    assert len(familias.fprime) == 4 and len(familias.pprime) == 4


def test_ladrillo_de_un_punto():
    ladrillo = build_brick_singleton()
    assert len(ladrillo.P) == 0
    assert diameter(ladrillo.ambient) == 0.0
    assert ladrillo.contract.valid


def test_ladrillo_de_koch():
    ladrillo = build_brick("koch", Ball([0.17, 0.03], 0.2))
    assert ladrillo.address == (0,)
    assert len(ladrillo.P) == 3
    assert ladrillo.contract.valid
    assert derive_families(ladrillo).k == 1


def test_informe_de_autorregeneracion():
    abiertos = [AxisBox([0.0], [0.2]), AxisBox([0.5], [0.5001])]
    informe = certify_self_regenerating("cantor", abiertos, lam=0.1)
    assert informe["certified"] == 1
    bueno, malo = informe["samples"]
    assert bueno["verdict"] == "certified"
    assert bueno["outside_u_diameter"] <= 2 * DEFAULTS.paso_intervalo
    assert malo["verdict"] == "failed"
    assert malo["error_type"] == "SubcopyError"
    assert "not a proof" in informe["note"]


def test_informe_de_un_punto():
    informe = certify_self_regenerating("singleton", [Ball([0.0], 1.0)], lam=0.1)
    assert informe["certified"] == 1
    assert informe["samples"][0]["maps"] == 1


def test_informe_de_espacio_desconocido():
    with pytest.raises(SpecFormatError):
        certify_self_regenerating("esfera", [Ball([0.0], 1.0)])


def test_redes_del_registro_son_deterministas():
    a = registry_net("sierpinski-carpet", DEFAULTS, 2)
    b = registry_net("sierpinski-carpet", DEFAULTS, 2)
    assert np.array_equal(a.points, b.points)


def test_red_de_la_alfombra_sin_centros_de_agujeros():
    red = registry_net("sierpinski-carpet", DEFAULTS, 2)
    x, y = red.points.T
    # Ningún punto en el agujero central ni en los de primer nivel
    assert not ((x > 1 / 3) & (x < 2 / 3) & (y > 1 / 3) & (y < 2 / 3)).any()
    assert not ((x > 1 / 9) & (x < 2 / 9) & (y > 1 / 9) & (y < 2 / 9)).any()
    assert red.resolution == pytest.approx(math.sqrt(5.0) / 6.0 / 9.0)


@pytest.mark.parametrize("centro", [(0.5, 0.28), (0.3, 0.3), (0.7, 0.6), (0.2, 0.75)])
def test_phi_de_la_alfombra_cubre_la_subcopia(centro):
    ladrillo = build_brick("sierpinski-carpet", Ball(list(centro), 0.15))
    contrato = ladrillo.contract
    assert contrato.surjectivity_defect <= contrato.tolerance
    assert contrato.collapse_defect <= contrato.tol_singleton
    assert contrato.valid
    # P telescópica: |w| * 7 hermanas
    assert len(ladrillo.P) == 7 * len(ladrillo.address)


def test_phi_invalida_falla_al_construir(monkeypatch):
    def contrato_roto(phi, trabajo, b_cloud, c_cloud, config):
        return PhiContract(1.0, 0.0, 1.0, 1.0, 1e-3, 1e-3)

    monkeypatch.setattr(ladrillos, "_contrato", contrato_roto)
    with pytest.raises(PhiContractError, match="phi construction invalid"):
        build_brick_interval(AxisBox([0.2], [0.6]))
    with pytest.raises(PhiContractError) as info:
        build_brick("cantor", AxisBox([0.0], [0.2]))
    assert info.value.defect == "surjectivity_defect"
