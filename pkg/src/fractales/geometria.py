"""
Representación finita de compactos del espacio euclídeo (redes de puntos),
regiones cerradas en forma explícita y las medidas métricas que usan el resto
de módulos: diámetro, distancia de Hausdorff, redes epsilon y recubrimientos
por bolas.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, cKDTree
from scipy.spatial.distance import directed_hausdorff, pdist
try:
    from scipy.spatial import QhullError
except ImportError:  # scipy < 1.8
    from scipy.spatial.qhull import QhullError

from .configuracion import GEOM_EPS
from .errores import DimensionError, MeshError, SpecFormatError

logger = logging.getLogger(__name__)

# Por debajo de este número de puntos el diámetro se calcula con todas las parejas
MAX_PUNTOS_FUERZA_BRUTA = 2500


def _como_matriz(points, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(1, -1)
    return arr


@dataclass(frozen=True, eq=False)
class PointCloud:
    """
    Red finita que aproxima un compacto: todo punto del conjunto ideal está a
    distancia <= resolution de algún punto de la lista.
    """
    points: np.ndarray
    resolution: float = 0.0

    def __post_init__(self):
        arr = _como_matriz(self.points)
        if arr.shape[0] == 0:
            raise ValueError("PointCloud vacía")
        if self.resolution < 0 or not np.isfinite(self.resolution):
            raise ValueError(f"resolución no válida: {self.resolution}")
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def subset(self, mask) -> "PointCloud":
        return PointCloud(self.points[mask], self.resolution)

    def union(self, *others: "PointCloud") -> "PointCloud":
        return cloud_union([self, *others])

    def to_json(self) -> dict:
        return {"dim": self.dim, "resolution": self.resolution,
                "points": self.points.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "PointCloud":
        try:
            dim = int(data["dim"])
            pts = np.asarray(data["points"], dtype=float).reshape(-1, dim)
            return cls(pts, float(data.get("resolution", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecFormatError(f"nube de puntos mal formada: {exc}") from exc


def cloud_union(clouds: Sequence[PointCloud]) -> PointCloud:
    """Unión de redes; la resolución es la peor de todas."""
    dims = {c.dim for c in clouds}
    if len(dims) != 1:
        raise DimensionError(f"dimensiones distintas en la unión: {sorted(dims)}")
    pts = np.vstack([c.points for c in clouds])
    return PointCloud(pts, max(c.resolution for c in clouds))


def unique_points(points: np.ndarray, decimals: int = 12) -> np.ndarray:
    """Elimina puntos repetidos hasta `decimals` cifras, conservando el orden."""
    clave = np.round(points, decimals) + 0.0
    _, idx = np.unique(clave, axis=0, return_index=True)
    return points[np.sort(idx)]


def interval_net(a: float, b: float, step: float) -> PointCloud:
    """
    Red de [a, b] con paso uniforme.

    Args:
        a: Extremo izquierdo.
        b: Extremo derecho.
        step: Paso máximo entre puntos consecutivos.

    Returns:
        PointCloud de dimensión 1 con resolución step/2.
    """
    n = max(1, int(np.ceil((b - a) / step - GEOM_EPS)))
    pts = np.linspace(a, b, n + 1)
    return PointCloud(pts.reshape(-1, 1), (b - a) / n / 2.0)


def grid_net(lo: Sequence[float], hi: Sequence[float], step: float) -> PointCloud:
    """Red rectangular de la caja [lo, hi] (cualquier dimensión)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    ejes = []
    pasos = []
    for a, b in zip(lo, hi):
        n = max(1, int(np.ceil((b - a) / step - GEOM_EPS)))
        ejes.append(np.linspace(a, b, n + 1))
        pasos.append((b - a) / n)
    malla = np.meshgrid(*ejes, indexing="ij")
    pts = np.stack([m.ravel() for m in malla], axis=1)
    return PointCloud(pts, 0.5 * float(np.linalg.norm(pasos)))


def save_csv(cloud: PointCloud, path) -> None:
    np.savetxt(path, cloud.points, delimiter=",", fmt="%.17g",
               header=f"resolution={cloud.resolution!r}")


def load_csv(path) -> PointCloud:
    resolution = 0.0
    with open(path, "r", encoding="utf-8") as f:
        cabecera = f.readline().strip()
    if cabecera.startswith("#") and "resolution=" in cabecera:
        resolution = float(cabecera.split("resolution=", 1)[1])
    datos = np.genfromtxt(path, delimiter=",", comments="#")
    # Con una sola fila genfromtxt devuelve un vector
    if datos.ndim == 1:
        datos = datos.reshape(1, -1)
    return PointCloud(datos, resolution)


def save_json(cloud: PointCloud, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(cloud.to_json(), f)


def load_json(path) -> PointCloud:
    with open(path, "r", encoding="utf-8") as f:
        return PointCloud.from_json(json.load(f))


# ---------------------------------------------------------------------------
# Regiones
# ---------------------------------------------------------------------------

class Region:
    """
    Conjunto descrito en forma cerrada. Las subclases implementan
    signed_distance (negativa dentro) y `closed` decide la frontera.
    """
    closed: bool = False

    def signed_distance(self, points) -> np.ndarray:
        raise NotImplementedError

    def contains(self, points) -> np.ndarray:
        d = self.signed_distance(points)
        if self.closed:
            return d <= GEOM_EPS
        return d < -GEOM_EPS

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Ball(Region):
    center: np.ndarray
    radius: float
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())

    def signed_distance(self, points) -> np.ndarray:
        pts = _como_matriz(points, self.center.size)
        return np.linalg.norm(pts - self.center, axis=1) - self.radius

    def project(self, points) -> np.ndarray:
        pts = _como_matriz(points, self.center.size)
        v = pts - self.center
        norma = np.linalg.norm(v, axis=1, keepdims=True)
        factor = np.where(norma > self.radius, self.radius / np.maximum(norma, GEOM_EPS), 1.0)
        return self.center + v * factor

    def to_json(self) -> dict:
        return {"type": "ball", "center": self.center.tolist(),
                "radius": self.radius, "closed": self.closed}


@dataclass(frozen=True, eq=False)
class AxisBox(Region):
    lo: np.ndarray
    hi: np.ndarray
    closed: bool = False

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).ravel()
        hi = np.asarray(self.hi, dtype=float).ravel()
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError(f"caja no válida: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def signed_distance(self, points) -> np.ndarray:
        pts = _como_matriz(points, self.lo.size)
        q = np.maximum(self.lo - pts, pts - self.hi)
        fuera = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        return fuera + np.minimum(q.max(axis=1), 0.0)

    def project(self, points) -> np.ndarray:
        pts = _como_matriz(points, self.lo.size)
        return np.clip(pts, self.lo, self.hi)

    def to_json(self) -> dict:
        return {"type": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist(),
                "closed": self.closed}


def _cruz(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True, eq=False)
class ConvexPolygon(Region):
    """Polígono convexo del plano. Los vértices se guardan en sentido antihorario."""
    vertices: np.ndarray
    closed: bool = True

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        if len(v) < 3:
            raise ValueError("un polígono necesita al menos 3 vértices")
        area = 0.5 * np.sum(_cruz(v, np.roll(v, -1, axis=0)))
        if area < 0:
            v = v[::-1]
        aristas = np.roll(v, -1, axis=0) - v
        giros = _cruz(aristas, np.roll(aristas, -1, axis=0))
        escala = max(float(np.ptp(v, axis=0).max()), 1.0)
        if np.any(giros <= GEOM_EPS * escala ** 2):
            raise ValueError("los vértices no están en posición convexa")
        object.__setattr__(self, "vertices", v)

    def _aristas(self):
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        return a, b

    def _mas_cercano(self, pts: np.ndarray):
        a, b = self._aristas()
        ab = b - a
        ap = pts[:, None, :] - a[None, :, :]
        t = np.clip(np.sum(ap * ab, axis=2) / np.sum(ab * ab, axis=1), 0.0, 1.0)
        cand = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        dist = np.linalg.norm(pts[:, None, :] - cand, axis=2)
        k = np.argmin(dist, axis=1)
        filas = np.arange(len(pts))
        return cand[filas, k], dist[filas, k]

    def _dentro(self, pts: np.ndarray) -> np.ndarray:
        a, b = self._aristas()
        lados = _cruz(b[None, :, :] - a[None, :, :], pts[:, None, :] - a[None, :, :])
        return np.all(lados >= 0.0, axis=1)

    def signed_distance(self, points) -> np.ndarray:
        pts = _como_matriz(points, 2)
        _, dist = self._mas_cercano(pts)
        return np.where(self._dentro(pts), -dist, dist)

    def project(self, points) -> np.ndarray:
        pts = _como_matriz(points, 2)
        cand, _ = self._mas_cercano(pts)
        return np.where(self._dentro(pts)[:, None], pts, cand)

    def to_json(self) -> dict:
        return {"type": "polygon", "vertices": self.vertices.tolist(),
                "closed": self.closed}


@dataclass(frozen=True, eq=False)
class HalfPlane(Region):
    """Semiespacio {x : normal·x >= offset}; el lado positivo es el que contiene."""
    normal: np.ndarray
    offset: float
    closed: bool = True

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).ravel()
        if not np.any(n):
            raise ValueError("normal nula")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    def signed_distance(self, points) -> np.ndarray:
        pts = _como_matriz(points, self.normal.size)
        return (self.offset - pts @ self.normal) / np.linalg.norm(self.normal)

    def to_json(self) -> dict:
        return {"type": "halfplane", "normal": self.normal.tolist(),
                "offset": self.offset, "closed": self.closed}


@dataclass(frozen=True, eq=False)
class Union(Region):
    parts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.parts:
            raise ValueError("unión vacía")
        object.__setattr__(self, "parts", tuple(self.parts))

    def signed_distance(self, points) -> np.ndarray:
        return np.min([p.signed_distance(points) for p in self.parts], axis=0)

    def contains(self, points) -> np.ndarray:
        return np.any([p.contains(points) for p in self.parts], axis=0)

    def to_json(self) -> dict:
        return {"type": "union", "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True, eq=False)
class Intersection(Region):
    parts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.parts:
            raise ValueError("intersección vacía")
        object.__setattr__(self, "parts", tuple(self.parts))

    def signed_distance(self, points) -> np.ndarray:
        return np.max([p.signed_distance(points) for p in self.parts], axis=0)

    def contains(self, points) -> np.ndarray:
        return np.all([p.contains(points) for p in self.parts], axis=0)

    def to_json(self) -> dict:
        return {"type": "intersection", "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True, eq=False)
class Complement(Region):
    inner: Region

    def signed_distance(self, points) -> np.ndarray:
        return -self.inner.signed_distance(points)

    def contains(self, points) -> np.ndarray:
        return ~self.inner.contains(points)

    def to_json(self) -> dict:
        return {"type": "complement", "inner": self.inner.to_json()}


def region_from_json(data: dict) -> Region:
    """Reconstruye una región a partir de su descripción JSON."""
    from .aplicaciones import parse_number, parse_vector

    try:
        tipo = data["type"]
        closed = bool(data.get("closed", tipo in ("polygon", "halfplane")))
        if tipo == "ball":
            return Ball(parse_vector(data["center"]), parse_number(data["radius"]), closed)
        if tipo == "box":
            return AxisBox(parse_vector(data["lo"]), parse_vector(data["hi"]), closed)
        if tipo == "polygon":
            return ConvexPolygon(np.array([parse_vector(v) for v in data["vertices"]]), closed)
        if tipo == "halfplane":
            return HalfPlane(parse_vector(data["normal"]), parse_number(data["offset"]), closed)
        if tipo == "union":
            return Union(tuple(region_from_json(p) for p in data["parts"]))
        if tipo == "intersection":
            return Intersection(tuple(region_from_json(p) for p in data["parts"]))
        if tipo == "complement":
            return Complement(region_from_json(data["inner"]))
        if tipo == "nearest":
            return NearestSet(np.array(data["a"], dtype=float), np.array(data["b"], dtype=float),
                              closed)
        if tipo == "pullback":
            from .aplicaciones import map_from_json
            return Pullback(region_from_json(data["region"]), map_from_json(data["chart"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecFormatError(f"región mal formada: {exc}") from exc
    raise SpecFormatError(f"tipo de región desconocido: {data.get('type')!r}")


# ---------------------------------------------------------------------------
# Medidas
# ---------------------------------------------------------------------------

def diameter_of(points: np.ndarray) -> float:
    """Máxima distancia entre parejas de una matriz (n, d) de puntos."""
    n, d = points.shape
    if n < 2:
        return 0.0
    if d == 1:
        return float(np.ptp(points[:, 0]))
    if n <= MAX_PUNTOS_FUERZA_BRUTA:
        return float(pdist(points).max())
    # El diámetro se alcanza entre vértices de la envolvente convexa
    try:
        hull = ConvexHull(points)
        extremos = points[hull.vertices]
    except QhullError:
        # Puntos alineados: basta con los extremos de cada coordenada
        extremos = points[np.unique(np.r_[points.argmin(axis=0), points.argmax(axis=0)])]
    if len(extremos) <= MAX_PUNTOS_FUERZA_BRUTA:
        return float(pdist(extremos).max())
    mejor = 0.0
    for i in range(0, len(extremos), 512):
        bloque = extremos[i:i + 512]
        dif = bloque[:, None, :] - extremos[None, :, :]
        mejor = max(mejor, float(np.sqrt((dif ** 2).sum(axis=2)).max()))
    return mejor


def diameter(cloud: PointCloud) -> float:
    """
    Diámetro de la red. El del conjunto ideal está en
    [resultado, resultado + 2*resolución].
    """
    return diameter_of(cloud.points)


def _comprobar_dim(a: PointCloud, b: PointCloud) -> None:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} != {b.dim}")


def farthest_point(a: PointCloud, b: PointCloud) -> tuple[float, int]:
    """
    Distancia dirigida max_{x en a} min_{y en b} |x - y| y el índice en `a`
    del punto que la alcanza.
    """
    _comprobar_dim(a, b)
    dist, _ = cKDTree(b.points).query(a.points)
    k = int(np.argmax(dist))
    return float(dist[k]), k


def directed_distance(a: PointCloud, b: PointCloud, accelerate: bool = False) -> float:
    _comprobar_dim(a, b)
    if accelerate:
        return farthest_point(a, b)[0]
    return float(directed_hausdorff(a.points, b.points, seed=0)[0])


def hausdorff_distance(a: PointCloud, b: PointCloud, accelerate: bool = False) -> float:
    """
    Distancia de Hausdorff entre dos redes.

    Args:
        a: Primera nube.
        b: Segunda nube.
        accelerate: Usa un árbol k-d en vez del recorrido exhaustivo.

    Returns:
        max(d(a, b), d(b, a)) con d la distancia dirigida.
    """
    return max(directed_distance(a, b, accelerate), directed_distance(b, a, accelerate))


def epsilon_net(cloud: PointCloud, eps: float) -> PointCloud:
    """
    Subconjunto de la nube que es una eps-red de ella. Selección voraz en el
    orden de entrada, así el resultado es determinista.
    """
    if eps <= 0:
        raise ValueError("eps debe ser positivo")
    pts = cloud.points
    arbol = cKDTree(pts)
    cubierto = np.zeros(len(pts), dtype=bool)
    elegidos = []
    for i in range(len(pts)):
        if cubierto[i]:
            continue
        elegidos.append(i)
        cubierto[arbol.query_ball_point(pts[i], eps)] = True
    return PointCloud(pts[elegidos], cloud.resolution + eps)


@dataclass(frozen=True, eq=False)
class Cover:
    """Recubrimiento por bolas cerradas de igual radio."""
    centers: np.ndarray
    radius: float
    mesh: float

    @property
    def elements(self) -> list[Ball]:
        return [Ball(c, self.radius, closed=True) for c in self.centers]

    def containing(self, points) -> int | None:
        """Índice del primer elemento que contiene todos los puntos, o None."""
        pts = _como_matriz(points, self.centers.shape[1])
        dist = np.linalg.norm(pts[:, None, :] - self.centers[None, :, :], axis=2)
        ok = np.all(dist <= self.radius + GEOM_EPS, axis=0)
        idx = np.flatnonzero(ok)
        return int(idx[0]) if idx.size else None


def ball_cover(cloud: PointCloud, lam: float) -> Cover:
    """
    Recubrimiento de la nube con número de Lebesgue discreto >= lam: todo
    subconjunto de diámetro < lam - 2h cae dentro de una bola.

    Los centros son una (lam/2)-red de la nube y el radio es 3*lam/2, no
    lam/2. Un subconjunto de diámetro cercano a lam no cabe en una bola de
    radio lam/2 con centro en la red salvo que el centro sea justo su punto
    medio; con radio 3*lam/2 cabe siempre en la bola del centro más próximo
    a cualquiera de sus puntos.

    Args:
        cloud: Nube a recubrir.
        lam: Malla del recubrimiento.

    Returns:
        Cover con los centros, el radio 1.5*lam y la malla lam.
    """
    if lam <= 2.0 * cloud.resolution:
        raise MeshError(lam, cloud.resolution)
    red = epsilon_net(PointCloud(cloud.points), lam / 2.0)
    # Un conjunto de diámetro < lam con un punto a <= lam/2 del centro
    # queda a menos de 3*lam/2 de él
    cover = Cover(red.points.copy(), 1.5 * lam, lam)
    logger.debug("Recubrimiento de malla %g con %d bolas", lam, len(red))
    return cover


@dataclass(frozen=True, eq=False)
class NearestSet(Region):
    """
    Puntos al menos tan cerca de la red `a` como de la red `b`. Separa dos
    compactos disjuntos o que se tocan en un punto.
    """
    a: np.ndarray
    b: np.ndarray
    closed: bool = True

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "_arbol_a", cKDTree(a))
        object.__setattr__(self, "_arbol_b", cKDTree(b))

    def signed_distance(self, points) -> np.ndarray:
        pts = _como_matriz(points, self.a.shape[1])
        da, _ = self._arbol_a.query(pts)
        db, _ = self._arbol_b.query(pts)
        return da - db

    def to_json(self) -> dict:
        return {"type": "nearest", "a": self.a.tolist(), "b": self.b.tolist(),
                "closed": self.closed}


@dataclass(frozen=True, eq=False)
class Pullback(Region):
    """
    Región {t : chart(t) en region}, con chart una isometría afín. Para
    cartas de la recta la distancia con signo se calcula sobre la preimagen
    (relativa a la recta), no en el espacio de llegada.
    """
    region: Region
    chart: object

    @property
    def closed(self) -> bool:
        return self.region.closed

    def signed_distance(self, points) -> np.ndarray:
        pts = _como_matriz(points, self.chart.dim_in)
        if self.chart.dim_in == 1:
            return _sdf_preimagen(self.region, self.chart, pts[:, 0])
        return self.region.signed_distance(self.chart(pts))

    def contains(self, points) -> np.ndarray:
        pts = _como_matriz(points, self.chart.dim_in)
        return self.region.contains(self.chart(pts))

    def to_json(self) -> dict:
        return {"type": "pullback", "region": self.region.to_json(),
                "chart": self.chart.to_json()}


def _sdf_preimagen(region: Region, chart, t: np.ndarray) -> np.ndarray:
    """Distancia con signo de la preimagen por t -> offset + t*direccion."""
    if isinstance(region, Union):
        return np.min([_sdf_preimagen(p, chart, t) for p in region.parts], axis=0)
    if isinstance(region, Intersection):
        return np.max([_sdf_preimagen(p, chart, t) for p in region.parts], axis=0)
    if isinstance(region, Complement):
        return -_sdf_preimagen(region.inner, chart, t)
    if not isinstance(region, AxisBox):
        return region.signed_distance(chart(t[:, None]))
    o = np.asarray(chart.offset, dtype=float).ravel()
    d = np.asarray(chart.matrix, dtype=float)[:, 0]
    norma = float(np.linalg.norm(d))
    t0, t1 = -np.inf, np.inf
    for k in range(d.size):
        if abs(d[k]) <= GEOM_EPS:
            if not region.lo[k] - GEOM_EPS <= o[k] <= region.hi[k] + GEOM_EPS:
                return np.full(t.shape, np.inf)
            continue
        a, b = sorted(((region.lo[k] - o[k]) / d[k], (region.hi[k] - o[k]) / d[k]))
        t0, t1 = max(t0, a), min(t1, b)
    if t0 > t1:
        return np.full(t.shape, np.inf)
    return np.maximum(t0 - t, t - t1) * norma
