"""
Lenguaje de aplicaciones continuas X -> X como árboles de expresión:
identidad, constantes, afines, pliegues, proyecciones métricas, definiciones
a trozos, extensiones constantes fuera de un abierto y composiciones.

Cada nodo da una cota estructural de su constante de Lipschitz. Los nodos a
trozos solo tienen cota finita después de pasar la auditoría de continuidad
sobre una red (`audit`).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .configuracion import DEFAULTS, GEOM_EPS, Configuracion, tol_cont
from .errores import DimensionError, ExtensionHypothesisError, SpecFormatError
from .geometria import (
    AxisBox, Ball, ConvexPolygon, HalfPlane, PointCloud, Region, diameter,
    diameter_of, region_from_json, unique_points,
)

logger = logging.getLogger(__name__)

# Estados de la auditoría de continuidad
SIN_AUDITAR = None
AUDITADA = "passed"
FALLIDA = "failed"

# Parejas aleatorias usadas por la estimación empírica de Lipschitz
PAREJAS_MUESTRA = 20000


def parse_number(valor) -> float:
    """Acepta números JSON o cadenas racionales como "1/3" o "0.25"."""
    if isinstance(valor, str):
        try:
            return float(Fraction(valor.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecFormatError(f"número no válido: {valor!r}") from exc
    if isinstance(valor, bool) or not isinstance(valor, (int, float)):
        raise SpecFormatError(f"número no válido: {valor!r}")
    return float(valor)


def parse_vector(valor) -> np.ndarray:
    if not isinstance(valor, (list, tuple)):
        valor = [valor]
    return np.array([parse_number(v) for v in valor], dtype=float)


def parse_matrix(valor) -> np.ndarray:
    if not isinstance(valor, (list, tuple)):
        valor = [[valor]]
    filas = [parse_vector(f) for f in valor]
    return np.vstack(filas)


def _producto_lip(valores: Sequence[float]) -> float:
    # Un factor nulo domina a uno infinito: la composición es constante
    if any(v == 0.0 for v in valores):
        return 0.0
    return float(np.prod(valores))


def _puntos(x, dim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if dim > 1 or arr.size == 1 else arr.reshape(-1, 1)
    if arr.shape[1] != dim:
        raise DimensionError(f"se esperaban puntos de dimensión {dim}, llegan {arr.shape[1]}")
    return arr


class SelfMap:
    """Nodo base. `__call__` evalúa sobre una matriz (n, dim_in)."""

    dim_in: int
    dim_out: int

    @property
    def dim(self) -> int:
        return self.dim_in

    @property
    def lip(self) -> float:
        raise NotImplementedError

    def _eval(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, points) -> np.ndarray:
        pts = _puntos(points, self.dim_in)
        return self._eval(pts)

    def children(self) -> tuple["SelfMap", ...]:
        return ()

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Identity(SelfMap):
    dim_in: int = 1

    @property
    def dim_out(self) -> int:
        return self.dim_in

    @property
    def lip(self) -> float:
        return 1.0

    def _eval(self, pts):
        return pts.copy()

    def to_json(self):
        return {"type": "identity", "dim": self.dim_in}


@dataclass(frozen=True, eq=False)
class Constant(SelfMap):
    point: np.ndarray
    dim_in: int = 0

    def __post_init__(self):
        p = np.asarray(self.point, dtype=float).ravel()
        object.__setattr__(self, "point", p)
        if not self.dim_in:
            object.__setattr__(self, "dim_in", p.size)

    @property
    def dim_out(self) -> int:
        return self.point.size

    @property
    def lip(self) -> float:
        return 0.0

    def _eval(self, pts):
        return np.repeat(self.point[None, :], len(pts), axis=0)

    def to_json(self):
        return {"type": "constant", "point": self.point.tolist(), "dim": self.dim_in}


@dataclass(frozen=True, eq=False)
class Affine(SelfMap):
    """x -> matrix @ x + offset. La matriz puede ser rectangular (cartas)."""
    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        b = np.asarray(self.offset, dtype=float).ravel()
        if b.size != a.shape[0]:
            raise DimensionError(f"offset de tamaño {b.size} para matriz {a.shape}")
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "offset", b)
        object.__setattr__(self, "_lip", float(np.linalg.norm(a, 2)))

    @property
    def dim_in(self) -> int:
        return self.matrix.shape[1]

    @property
    def dim_out(self) -> int:
        return self.matrix.shape[0]

    @property
    def lip(self) -> float:
        return self._lip

    def _eval(self, pts):
        return pts @ self.matrix.T + self.offset

    def then(self, other: "Affine") -> "Affine":
        """Composición other∘self como una sola afín."""
        return Affine(other.matrix @ self.matrix, other.matrix @ self.offset + other.offset)

    def inverse(self) -> "Affine":
        inv = np.linalg.inv(self.matrix)
        return Affine(inv, -inv @ self.offset)

    def to_json(self):
        return {"type": "affine", "matrix": self.matrix.tolist(),
                "offset": self.offset.tolist()}


def similarity(ratio: float, offset, angle_deg: float = 0.0) -> Affine:
    """Semejanza del plano (o de la recta si offset tiene una coordenada)."""
    offset = np.asarray(offset, dtype=float).ravel()
    if offset.size == 1:
        return Affine([[ratio]], offset)
    t = math.radians(angle_deg)
    rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    return Affine(ratio * rot, offset)


def compose_affine(chain: Sequence[Affine]) -> Affine:
    """Reduce chain[0]∘chain[1]∘...∘chain[-1] a una sola afín."""
    total = chain[-1]
    for m in reversed(chain[:-1]):
        total = total.then(m)
    return total


@dataclass(frozen=True, eq=False)
class Fold(SelfMap):
    """Refleja los puntos del lado negativo del semiplano; fija el resto."""
    axis: HalfPlane

    @property
    def dim_in(self) -> int:
        return self.axis.normal.size

    @property
    def dim_out(self) -> int:
        return self.dim_in

    @property
    def lip(self) -> float:
        return 1.0

    def _eval(self, pts):
        n = self.axis.normal
        s = pts @ n - self.axis.offset
        out = pts.copy()
        neg = s < 0
        out[neg] -= (2.0 * s[neg] / (n @ n))[:, None] * n
        return out

    def to_json(self):
        return {"type": "fold", "axis": self.axis.to_json()}


@dataclass(frozen=True, eq=False)
class MetricProjection(SelfMap):
    target: Region

    def __post_init__(self):
        if not isinstance(self.target, (ConvexPolygon, AxisBox, Ball)):
            raise TypeError("la proyección métrica solo admite polígonos, cajas o bolas")

    @property
    def dim_in(self) -> int:
        if isinstance(self.target, ConvexPolygon):
            return 2
        if isinstance(self.target, AxisBox):
            return self.target.lo.size
        return self.target.center.size

    @property
    def dim_out(self) -> int:
        return self.dim_in

    @property
    def lip(self) -> float:
        return 1.0

    def _eval(self, pts):
        return self.target.project(pts)

    def to_json(self):
        return {"type": "projection", "target": self.target.to_json()}


@dataclass(frozen=True, eq=False)
class Piecewise(SelfMap):
    """
    Gana la primera rama cuya región contiene al punto; si ninguna, `default`.
    """
    branches: tuple
    default: SelfMap
    continuity: str | None = SIN_AUDITAR

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple((r, m) for r, m in self.branches))

    @property
    def dim_in(self) -> int:
        return self.default.dim_in

    @property
    def dim_out(self) -> int:
        return self.default.dim_out

    @property
    def lip(self) -> float:
        if self.continuity != AUDITADA:
            return math.inf
        return max([self.default.lip] + [m.lip for _, m in self.branches])

    def labels(self, pts: np.ndarray) -> np.ndarray:
        etiqueta = np.full(len(pts), len(self.branches), dtype=int)
        libre = np.ones(len(pts), dtype=bool)
        for i, (region, _) in enumerate(self.branches):
            sel = libre & region.contains(pts)
            etiqueta[sel] = i
            libre &= ~sel
        return etiqueta

    def branch_map(self, i: int) -> SelfMap:
        return self.default if i == len(self.branches) else self.branches[i][1]

    def _eval(self, pts):
        etiqueta = self.labels(pts)
        out = np.empty((len(pts), self.dim_out))
        for i in np.unique(etiqueta):
            sel = etiqueta == i
            out[sel] = self.branch_map(int(i))._eval(pts[sel])
        return out

    def children(self):
        return tuple(m for _, m in self.branches) + (self.default,)

    def to_json(self):
        return {"type": "piecewise",
                "branches": [{"region": r.to_json(), "map": m.to_json()} for r, m in self.branches],
                "default": self.default.to_json()}


@dataclass(frozen=True, eq=False)
class ConstantOutside(SelfMap):
    """`inner` dentro de u y el punto `anchor` fuera."""
    u: Region
    inner: SelfMap
    anchor: np.ndarray
    continuity: str | None = SIN_AUDITAR

    def __post_init__(self):
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float).ravel())

    @property
    def dim_in(self) -> int:
        return self.inner.dim_in

    @property
    def dim_out(self) -> int:
        return self.anchor.size

    @property
    def lip(self) -> float:
        if self.continuity != AUDITADA:
            return math.inf
        return self.inner.lip

    def labels(self, pts: np.ndarray) -> np.ndarray:
        return np.where(self.u.contains(pts), 0, 1)

    def branch_map(self, i: int) -> SelfMap:
        return self.inner if i == 0 else Constant(self.anchor, self.dim_in)

    def _eval(self, pts):
        dentro = self.u.contains(pts)
        out = np.repeat(self.anchor[None, :], len(pts), axis=0)
        if dentro.any():
            out[dentro] = self.inner._eval(pts[dentro])
        return out

    def children(self):
        return (self.inner,)

    def to_json(self):
        return {"type": "constant_outside", "u": self.u.to_json(),
                "inner": self.inner.to_json(), "anchor": self.anchor.tolist()}


@dataclass(frozen=True, eq=False)
class Compose(SelfMap):
    """chain[0]∘chain[1]∘...; el último elemento se aplica primero."""
    chain: tuple

    def __post_init__(self):
        chain = tuple(self.chain)
        if not chain:
            raise ValueError("composición vacía")
        for exterior, interior in zip(chain[:-1], chain[1:]):
            if exterior.dim_in != interior.dim_out:
                raise DimensionError("dimensiones incompatibles en la composición")
        object.__setattr__(self, "chain", chain)

    @property
    def dim_in(self) -> int:
        return self.chain[-1].dim_in

    @property
    def dim_out(self) -> int:
        return self.chain[0].dim_out

    @property
    def lip(self) -> float:
        return _producto_lip([m.lip for m in self.chain])

    def _eval(self, pts):
        for m in reversed(self.chain):
            pts = m._eval(pts)
        return pts

    def children(self):
        return self.chain

    def to_json(self):
        return {"type": "compose", "chain": [m.to_json() for m in self.chain]}


@dataclass(frozen=True, eq=False)
class DistanceFunctional(SelfMap):
    """x -> |x - base| / scale, con valores en la recta."""
    base: np.ndarray
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float).ravel())
        if not self.scale > 0:
            raise ValueError("la escala debe ser positiva")

    @property
    def dim_in(self) -> int:
        return self.base.size

    @property
    def dim_out(self) -> int:
        return 1

    @property
    def lip(self) -> float:
        return 1.0 / self.scale

    def _eval(self, pts):
        return (np.linalg.norm(pts - self.base, axis=1) / self.scale)[:, None]

    def to_json(self):
        return {"type": "distance", "base": self.base.tolist(), "scale": self.scale}


@dataclass(frozen=True, eq=False)
class Polyline(SelfMap):
    """
    Camino poligonal [0, 1] -> R^d parametrizado por longitud de arco. Los
    parámetros fuera de [0, 1] se recortan.
    """
    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        tramos = np.linalg.norm(np.diff(v, axis=0), axis=1)
        acumulado = np.concatenate([[0.0], np.cumsum(tramos)])
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "_longitud", float(acumulado[-1]))
        total = acumulado[-1] if acumulado[-1] > 0 else 1.0
        object.__setattr__(self, "_nodos", acumulado / total)

    @property
    def dim_in(self) -> int:
        return 1

    @property
    def dim_out(self) -> int:
        return self.vertices.shape[1]

    @property
    def lip(self) -> float:
        return self._longitud

    def _eval(self, pts):
        t = np.clip(pts[:, 0], 0.0, 1.0)
        if len(self.vertices) == 1:
            return np.repeat(self.vertices, len(t), axis=0)
        return np.stack([np.interp(t, self._nodos, self.vertices[:, k])
                         for k in range(self.dim_out)], axis=1)

    def to_json(self):
        return {"type": "polyline", "vertices": self.vertices.tolist()}


@dataclass(frozen=True, eq=False)
class MapFamily:
    maps: tuple
    label: str = ""

    def __post_init__(self):
        maps = tuple(self.maps)
        if len({m.dim_in for m in maps}) > 1:
            raise DimensionError(f"familia {self.label!r} con dimensiones mezcladas")
        object.__setattr__(self, "maps", maps)

    def __len__(self) -> int:
        return len(self.maps)

    def __iter__(self) -> Iterator[SelfMap]:
        return iter(self.maps)

    def __getitem__(self, i: int) -> SelfMap:
        return self.maps[i]

    @property
    def alpha(self) -> float:
        """Mayor cota de Lipschitz de la familia."""
        return max((m.lip for m in self.maps), default=0.0)

    def to_json(self) -> dict:
        return {"label": self.label, "maps": [m.to_json() for m in self.maps]}


# ---------------------------------------------------------------------------
# Evaluación y cotas
# ---------------------------------------------------------------------------

def apply(m: SelfMap, x) -> np.ndarray:
    """Imagen de un único punto."""
    return m(_puntos(x, m.dim_in))[0]


def empirical_lipschitz(m: SelfMap, c: PointCloud, vecinos: int = 8,
                        semilla: int = 0) -> float:
    """
    Cota inferior de Lip(m) sobre la red: cociente máximo entre parejas de
    vecinos próximos y una muestra aleatoria de parejas lejanas.
    """
    pts = c.points
    n = len(pts)
    if n < 2:
        raise ValueError("hacen falta al menos dos puntos")
    imagen = m(pts)
    k = min(vecinos + 1, n)
    _, idx = cKDTree(pts).query(pts, k=k)
    idx = idx.reshape(n, -1)
    i = np.repeat(np.arange(n), idx.shape[1] - 1)
    j = idx[:, 1:].ravel()
    rng = np.random.RandomState(semilla)
    muestra = min(PAREJAS_MUESTRA, n * (n - 1) // 2)
    i = np.concatenate([i, rng.randint(0, n, muestra)])
    j = np.concatenate([j, rng.randint(0, n, muestra)])
    dx = np.linalg.norm(pts[i] - pts[j], axis=1)
    ok = dx > GEOM_EPS
    if not ok.any():
        return 0.0
    dy = np.linalg.norm(imagen[i[ok]] - imagen[j[ok]], axis=1)
    return float((dy / dx[ok]).max())


def image_cloud(m: SelfMap, c: PointCloud) -> PointCloud:
    """
    Imagen punto a punto de la red. La resolución se multiplica por la cota
    de Lipschitz; sin cota finita se usa el doble de la estimación empírica.
    """
    pts = m(c.points)
    lip = m.lip
    if lip == 0.0:
        return PointCloud(unique_points(pts), 0.0)
    if not math.isfinite(lip):
        lip = 2.0 * empirical_lipschitz(m, c) if len(c) > 1 else 0.0
    return PointCloud(pts, lip * c.resolution)


def family_image_clouds(maps: Sequence[SelfMap], c: PointCloud) -> list[PointCloud]:
    """
    image_cloud para toda una familia. Las composiciones que empiezan por el
    mismo nodo (el mismo objeto) comparten esa primera imagen, que se
    calcula una sola vez y sin repeticiones.
    """
    primeras: dict = {}
    nubes = []
    for m in maps:
        nodos = m.chain[::-1] if isinstance(m, Compose) else (m,)
        clave = id(nodos[0])
        if clave not in primeras:
            primeras[clave] = unique_points(nodos[0](c.points))
        pts = primeras[clave]
        for nodo in nodos[1:]:
            pts = nodo._eval(pts)
        lip = m.lip
        if lip == 0.0:
            nubes.append(PointCloud(unique_points(pts), 0.0))
            continue
        if not math.isfinite(lip):
            lip = 2.0 * empirical_lipschitz(m, c) if len(c) > 1 else 0.0
        nubes.append(PointCloud(pts, lip * c.resolution))
    return nubes


def _auditar_nodo(m, cloud: PointCloud, tol: float):
    """Comprueba las parejas cercanas que caen en ramas distintas."""
    pts = cloud.points
    etiqueta = m.labels(pts)
    hijos = {}
    for i in np.unique(etiqueta):
        sel = etiqueta == i
        hijos[int(i)] = audit(m.branch_map(int(i)), cloud.subset(sel), tol)
    banda = 2.0 * cloud.resolution + GEOM_EPS
    ok = True
    if len(pts) > 1 and banda > GEOM_EPS:
        parejas = cKDTree(pts).query_pairs(banda, output_type="ndarray")
        if len(parejas):
            a, b = parejas[:, 0], parejas[:, 1]
            cruce = etiqueta[a] != etiqueta[b]
            if cruce.any():
                a, b = a[cruce], b[cruce]
                valores = m._eval(pts)
                lips = np.array([hijos.get(k, m.branch_map(k)).lip
                                 for k in range(int(etiqueta.max()) + 1)])
                lip_par = lips[etiqueta[a]] + lips[etiqueta[b]]
                dist = np.linalg.norm(pts[a] - pts[b], axis=1)
                salto = np.linalg.norm(valores[a] - valores[b], axis=1)
                with np.errstate(invalid="ignore"):
                    limite = tol + 2.0 * lip_par * dist
                malas = ~(salto <= limite)
                if malas.any():
                    k = int(np.argmax(np.where(malas, salto, -1.0)))
                    logger.debug("Salto de %.3e entre %s y %s", salto[k], pts[a[k]], pts[b[k]])
                    ok = False
    return hijos, ok


def audit(m: SelfMap, cloud: PointCloud, tol: float | None = None) -> SelfMap:
    """
    Auditoría de continuidad de todos los nodos a trozos de `m` sobre la red
    `cloud` de su dominio. Devuelve un árbol nuevo con el estado anotado; los
    nodos que fallan quedan evaluables pero con cota de Lipschitz infinita.

    Args:
        m: Aplicación a auditar.
        cloud: Red del dominio donde se usará la aplicación.
        tol: Tolerancia tol_cont; por defecto 1e-6 veces el diámetro de la red.

    Returns:
        Copia de `m` con los nodos Piecewise y ConstantOutside auditados.
    """
    if tol is None:
        tol = tol_cont(diameter(cloud))
    if isinstance(m, Compose):
        nuevos = []
        actual = cloud
        for nodo in reversed(m.chain):
            a = audit(nodo, actual, tol)
            nuevos.append(a)
            actual = image_cloud(a, actual)
        return Compose(tuple(reversed(nuevos)))
    if isinstance(m, Piecewise):
        hijos, ok = _auditar_nodo(m, cloud, tol)
        ramas = tuple((r, hijos.get(i, mapa)) for i, (r, mapa) in enumerate(m.branches))
        default = hijos.get(len(m.branches), m.default)
        estado = AUDITADA if ok else FALLIDA
        if not ok:
            logger.warning("La auditoría de continuidad falla en un nodo piecewise")
        return Piecewise(ramas, default, estado)
    if isinstance(m, ConstantOutside):
        hijos, ok = _auditar_nodo(m, cloud, tol)
        if not ok:
            logger.warning("La auditoría de continuidad falla en un nodo constant_outside")
        return ConstantOutside(m.u, hijos.get(0, m.inner), m.anchor,
                               AUDITADA if ok else FALLIDA)
    return m


def make_constant_outside(f: SelfMap, u: Region, ambient: PointCloud,
                          domain: PointCloud | None = None,
                          config: Configuracion = DEFAULTS) -> SelfMap:
    """
    Extensión de f (definida en A) a todo el espacio, constante fuera de u.

    Args:
        f: Aplicación definida sobre A.
        u: Abierto fuera del cual f ya es constante en A.
        ambient: Red del espacio X.
        domain: Red de A; por defecto la propia red ambiente.

    Returns:
        Nodo ConstantOutside auditado sobre la red ambiente.
    """
    dominio = ambient if domain is None else domain
    if isinstance(f, Constant):
        return f
    fuera = ~u.contains(dominio.points)
    if fuera.any():
        valores = f(dominio.points[fuera])
        d = diameter_of(valores)
        if d > tol_cont(diameter(dominio), config):
            raise ExtensionHypothesisError(d)
        anchor = valores[0]
    else:
        # A está dentro de u: cualquier valor de f(A) sirve como ancla
        anchor = f(dominio.points[:1])[0]
    return audit(ConstantOutside(u, f, anchor), ambient)


def map_from_json(data: dict, dim: int | None = None) -> SelfMap:
    """Reconstruye un árbol de aplicaciones desde su descripción JSON."""
    if not isinstance(data, dict) or "type" not in data:
        raise SpecFormatError(f"nodo sin etiqueta 'type': {data!r}")
    tipo = data["type"]
    try:
        if tipo == "identity":
            return Identity(int(data.get("dim", dim or 1)))
        if tipo == "constant":
            p = parse_vector(data["point"])
            return Constant(p, int(data.get("dim", dim or p.size)))
        if tipo == "affine":
            return Affine(parse_matrix(data["matrix"]), parse_vector(data["offset"]))
        if tipo == "fold":
            eje = region_from_json(data["axis"])
            if not isinstance(eje, HalfPlane):
                raise SpecFormatError("el eje de un pliegue debe ser un semiplano")
            return Fold(eje)
        if tipo == "projection":
            return MetricProjection(region_from_json(data["target"]))
        if tipo == "piecewise":
            ramas = tuple((region_from_json(b["region"]), map_from_json(b["map"], dim))
                          for b in data["branches"])
            return Piecewise(ramas, map_from_json(data["default"], dim))
        if tipo == "constant_outside":
            return ConstantOutside(region_from_json(data["u"]),
                                   map_from_json(data["inner"], dim),
                                   parse_vector(data["anchor"]))
        if tipo == "compose":
            return Compose(tuple(map_from_json(m, dim) for m in data["chain"]))
        if tipo == "distance":
            return DistanceFunctional(parse_vector(data["base"]), parse_number(data["scale"]))
        if tipo == "polyline":
            return Polyline(parse_matrix(data["vertices"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecFormatError(f"nodo {tipo!r} mal formado: {exc}") from exc
    raise SpecFormatError(f"tipo de nodo desconocido: {tipo!r}")


def family_from_json(data: dict) -> MapFamily:
    if "maps" not in data:
        raise SpecFormatError("la familia necesita una lista 'maps'")
    return MapFamily(tuple(map_from_json(m) for m in data["maps"]), data.get("label", ""))
