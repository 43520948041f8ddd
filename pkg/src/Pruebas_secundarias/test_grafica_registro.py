"""
Pruebas de la salida gráfica y del registro de procedencia.
"""
import numpy as np
import pytest

from fractales import __version__
from fractales.configuracion import DEFAULTS
from fractales.errores import DimensionError, SpecFormatError
from fractales.geometria import PointCloud, interval_net
from fractales.grafica import rasterize, save_cloud, save_pgm
from fractales.registro import Provenance, read_provenance


def test_raster_de_una_diagonal():
    nube = PointCloud(np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]]))
    imagen = rasterize(nube, 2)
    assert imagen.shape == (3, 3)
    assert imagen[2, 0] == 0 and imagen[1, 1] == 0 and imagen[0, 2] == 0
    assert (imagen == 0).sum() == 3


def test_raster_de_la_recta():
    imagen = rasterize(interval_net(0.0, 1.0, 0.1), 10)
    assert imagen.shape == (1, 11)
    assert (imagen == 0).all()


def test_raster_de_dimension_tres():
    with pytest.raises(DimensionError):
        rasterize(PointCloud(np.zeros((2, 3))))


def test_pgm_binario(tmp_path):
    ruta = tmp_path / "nube.pgm"
    save_pgm(PointCloud(np.array([[0.0, 0.0], [1.0, 1.0]])), ruta, 4)
    datos = ruta.read_bytes()
    assert datos.startswith(b"P5\n5 5\n255\n")
    assert len(datos) == len(b"P5\n5 5\n255\n") + 25


def test_pgm_determinista(tmp_path):
    nube = interval_net(0.0, 1.0, 0.01)
    save_cloud(nube, tmp_path / "a.pgm", "pgm")
    save_cloud(nube, tmp_path / "b.pgm", "pgm")
    assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()


def test_png(tmp_path):
    ruta = tmp_path / "nube.png"
    save_cloud(interval_net(0.0, 1.0, 0.01), ruta, "png")
    assert ruta.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_formato_desconocido(tmp_path):
    with pytest.raises(SpecFormatError):
        save_cloud(interval_net(0.0, 1.0, 0.1), tmp_path / "nube.svg", "svg")


def test_registro_en_memoria():
    registro = Provenance(timestamp=False)
    registro.stage("certify", depth=4, puntos=np.arange(3))
    cabecera, etapa = registro.records
    assert cabecera["stage"] == "header"
    assert cabecera["version"] == __version__
    assert cabecera["config"]["lam"] == DEFAULTS.lam
    assert "date" not in cabecera
    assert etapa["stage"] == "certify" and etapa["depth"] == 4


def test_registro_en_fichero(tmp_path):
    ruta = tmp_path / "procedencia.jsonl"
    with Provenance(ruta, timestamp=False) as registro:
        registro.stage("attractor", points=10, resolution=float("nan"),
                       cloud=interval_net(0.0, 1.0, 0.5))
    lineas = read_provenance(ruta)
    assert [l["stage"] for l in lineas] == ["header", "attractor"]
    assert lineas[1]["cloud"]["points"] == [[0.0], [0.5], [1.0]]


def test_registro_sin_fecha_es_reproducible(tmp_path):
    for nombre in ("a.jsonl", "b.jsonl"):
        with Provenance(tmp_path / nombre, timestamp=False) as registro:
            registro.stage("glue", n1=4)
    assert (tmp_path / "a.jsonl").read_text() == (tmp_path / "b.jsonl").read_text()
