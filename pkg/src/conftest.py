import pytest


@pytest.fixture(autouse=True)
def carpeta_de_trabajo(tmp_path, monkeypatch):
    """Los registros por defecto de la CLI se escriben en una carpeta temporal."""
    monkeypatch.chdir(tmp_path)
    return tmp_path
