"""
Cálculo de extensiones de fractales topológicos: condición de los puntos
(f(im p) es un punto), pegados de sistemas disjuntos o con un punto común,
continuos de Peano sobre rejilla, su descomposición en trozos pequeños y la
cadena completa que construye una estructura fractal sobre un continuo a
partir de un subespacio autorregenerante.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Iterator, NamedTuple, Sequence

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph
from scipy.spatial import cKDTree

from .aplicaciones import (
    Affine, Compose, Constant, DistanceFunctional, Identity, MapFamily, Piecewise,
    Polyline, SelfMap, audit, empirical_lipschitz, family_image_clouds, image_cloud,
    make_constant_outside,
)
from .configuracion import DEFAULTS, GEOM_EPS, Configuracion, tol_singleton
from .contraccion import (
    ContractionCertificate, FractalSystem, enumerative_certify, verify_fractal,
)
from .errores import (
    ContractionMissingError, DecompositionError, EmptyInteriorError,
    ExtensionHypothesisError, FractalError, GlueError, NotAFractalError,
    SandwichError, SingletonCheckError, SpecFormatError,
)
from .geometria import (
    AxisBox, Complement, Intersection, NearestSet, PointCloud, Pullback, Region,
    Union, cloud_union, diameter, diameter_of, farthest_point, unique_points,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Condición de los puntos
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtensionCertificate:
    """Constantes n1, n2, n3, epsilon y delta de la extensión F ∪ P."""
    n1: int
    n2: int
    n3: int
    epsilon: float
    delta: float
    combined_depth: int
    singleton_checks: tuple = ()
    tol_singleton: float = 0.0
    contraction: ContractionCertificate | None = None

    def worst_checks(self) -> list:
        """Para cada p, la comprobación (f, p, diámetro) con mayor diámetro."""
        peor: dict = {}
        for f, p, d in self.singleton_checks:
            if p not in peor or d > peor[p][2]:
                peor[p] = (f, p, d)
        return [peor[p] for p in sorted(peor)]

    def to_json(self) -> dict:
        # Con muchas aplicaciones colapsantes la lista completa es cuadrática
        return {
            "n1": self.n1, "n2": self.n2, "n3": self.n3,
            "epsilon": self.epsilon, "delta": self.delta,
            "combined_depth": self.combined_depth,
            "tol_singleton": self.tol_singleton,
            "singleton_checks": [list(c) for c in self.worst_checks()],
            "singleton_checks_total": len(self.singleton_checks),
            "contraction": self.contraction.to_json() if self.contraction else None,
        }


def uniform_continuity_radius(maps: Sequence[SelfMap], X: PointCloud, eps: float,
                              config: Configuracion = DEFAULTS) -> float:
    """
    Radio delta tal que conjuntos de diámetro < delta tienen imagen de
    diámetro < eps por todas las aplicaciones dadas.
    """
    peor = 0.0
    for m in maps:
        lip = m.lip
        if not math.isfinite(lip):
            lip = config.factor_seguridad * empirical_lipschitz(m, X)
        peor = max(peor, lip)
    if peor == 0.0:
        return math.inf
    return eps / peor

def _diametros_sobre(maps: Sequence[SelfMap], pts: np.ndarray) -> Iterator[float]:
    """
    Diámetro de f(pts) para cada f, de forma perezosa. Las composiciones se
    evalúan paso a paso y se cortan en cuanto la imagen es un punto; las que
    empiezan por el mismo nodo comparten esa primera imagen.
    """
    primeras: dict = {}
    for m in maps:
        nodos = m.chain[::-1] if isinstance(m, Compose) else (m,)
        clave = id(nodos[0])
        if clave not in primeras:
            primeras[clave] = unique_points(nodos[0](pts))
        actual = primeras[clave]
        for nodo in nodos[1:]:
            if len(actual) <= 1:
                break
            actual = unique_points(nodo(actual))
        yield diameter_of(actual) if len(actual) > 1 else 0.0


def collapsing_letters(maps: Sequence[SelfMap], X: PointCloud,
                       config: Configuracion = DEFAULTS) -> list[int]:
    """
    Índices j tales que f(im m_j) es un punto para toda f de la familia.
    Son las letras que el certificador enumerativo puede podar.
    """
    tol = tol_singleton(X.resolution, config)
    letras = []
    for j, nube in enumerate(family_image_clouds(maps, X)):
        im_p = unique_points(nube.points)
        if all(d <= tol for d in _diametros_sobre(maps, im_p)):
            letras.append(j)
    return letras


def _palabras(P: MapFamily, longitud_max: int, dim: int) -> list[SelfMap]:
    """Todas las composiciones de P de longitud < longitud_max (incluida la vacía)."""
    palabras = [Identity(dim)]
    for n in range(1, longitud_max):
        for w in product(range(len(P)), repeat=n):
            palabras.append(Compose(tuple(P[i] for i in w)))
    return palabras


def check_condition_bang(F: MapFamily, P: MapFamily, X: PointCloud,
                         lam: float = DEFAULTS.lam,
                         certificate: ContractionCertificate | None = None,
                         n_max: int = DEFAULTS.n_max, budget: int = DEFAULTS.budget,
                         config: Configuracion = DEFAULTS,
                         singleton_letters: Sequence[int] = ()) -> ExtensionCertificate:
    """
    Comprueba que F es topológicamente contractiva, que f(im p) es un punto
    para toda f en F ∪ P y toda p en P y que X = (F ∪ P)(X).

    Args:
        F: Familia contractiva.
        P: Familia colapsante (puede ser vacía).
        X: Red del espacio.
        lam: Malla (epsilon) de la certificación de F.
        certificate: Certificado de F ya calculado a malla lam.

    Returns:
        ExtensionCertificate con n1, n2, n3, epsilon, delta y las
        comprobaciones de punto.
    """
    cert = certificate if certificate is not None else enumerative_certify(
        F, X, lam, n_max, budget, singleton_letters)
    if not cert.certified:
        raise ContractionMissingError(
            f"F is not certified topologically contracting at lambda={lam}")
    n1 = cert.depth_n
    if len(P) == 0:
        return ExtensionCertificate(n1, 0, 0, lam, lam, n1, (), 0.0, cert)

    tol = tol_singleton(X.resolution, config)
    todas = F.maps + P.maps
    nubes = family_image_clouds(todas, X)
    comprobaciones = []
    for j in range(len(P)):
        im_p = unique_points(nubes[len(F) + j].points)
        for i, d in enumerate(_diametros_sobre(todas, im_p)):
            comprobaciones.append((i, j, d))
            if d > tol:
                raise SingletonCheckError(i, j, d)

    imagenes = cloud_union(nubes)
    d, k = farthest_point(X, imagenes)
    if d > max(2.0 * X.resolution, imagenes.resolution) + config.holgura_singleton:
        raise NotAFractalError(X.points[k], d)

    n2 = 1
    epsilon = lam
    delta = uniform_continuity_radius(_palabras(P, n2, X.dim), X, epsilon, config)
    if delta >= lam:
        delta = lam
        cert3 = cert
    else:
        cert3 = enumerative_certify(F, X, delta, n_max, budget, singleton_letters)
        if not cert3.certified:
            raise ContractionMissingError(f"F is not certified at delta={delta}")
    n3 = cert3.depth_n
    combinada = max(n1, 2 * n2, 2 * n3)
    logger.info("Condición de los puntos: n1=%d n2=%d n3=%d eps=%g delta=%g n=%d",
                n1, n2, n3, epsilon, delta, combinada)
    return ExtensionCertificate(n1, n2, n3, epsilon, delta, combinada,
                                tuple(comprobaciones), tol, cert)


# ---------------------------------------------------------------------------
# Pegados
# ---------------------------------------------------------------------------

def _puntos_comunes(Y: PointCloud, Z: PointCloud, tol: float) -> np.ndarray:
    """Puntos de Y a distancia <= tol de Z."""
    d, _ = cKDTree(Z.points).query(Y.points)
    return Y.points[d <= tol]


def _extender(m: SelfMap, lado: Region, valor) -> Piecewise:
    return Piecewise(((lado, m),), Constant(np.asarray(valor, dtype=float), m.dim_in))


def _certificar_pegado(space: PointCloud, F: MapFamily, P: MapFamily, lam: float,
                       n_max: int, budget: int, config: Configuracion) -> FractalSystem:
    bang = check_condition_bang(F, P, space, lam, n_max=n_max, budget=budget, config=config,
                                singleton_letters=collapsing_letters(F.maps, space, config))
    sistema = FractalSystem(space, F, P, extension=bang)
    unicos = collapsing_letters(sistema.maps, space, config)
    sistema = verify_fractal(sistema, lam, n_max, budget, singleton_letters=unicos)
    if not sistema.certificate.certified:
        raise FractalError(f"glued system not certified at lambda={lam}")
    return sistema


def _comprobar_cobertura(bridge: MapFamily, Y: PointCloud, Z: PointCloud) -> None:
    imagenes = cloud_union([image_cloud(p, Y) for p in bridge])
    d, k = farthest_point(Z, imagenes)
    if d > 2.0 * max(Z.resolution, imagenes.resolution) + GEOM_EPS:
        raise GlueError(f"bridge images do not cover Z: gap {d:.3e} at {Z.points[k]}")


def glue_disjoint(Ysys: FractalSystem, Z: PointCloud, bridge: MapFamily, y0, z0,
                  lam: float = DEFAULTS.lam, n_max: int = DEFAULTS.n_max,
                  budget: int = DEFAULTS.budget,
                  config: Configuracion = DEFAULTS) -> FractalSystem:
    """
    Pegado de un fractal topológico (Y, F) con un compacto Z disjunto que es
    unión finita de imágenes continuas de Y.

    Args:
        Ysys: Sistema certificado sobre Y.
        Z: Red de Z.
        bridge: Aplicaciones Y -> Z cuya unión de imágenes es Z.
        y0: Punto de Y (valor de las f' sobre Z).
        z0: Punto de Z (valor de las p' sobre Z).

    Returns:
        Sistema certificado sobre Y ∪ Z.
    """
    Y = Ysys.space
    comunes = _puntos_comunes(Y, Z, Y.resolution + Z.resolution + GEOM_EPS)
    if len(comunes):
        raise GlueError("sets are not disjoint: use glue_wedge")
    _comprobar_cobertura(bridge, Y, Z)
    lado_y = NearestSet(Y.points, Z.points)
    space = cloud_union([Y, Z])
    F = MapFamily(tuple(audit(_extender(f, lado_y, y0), space) for f in Ysys.maps), "F'")
    P = MapFamily(tuple(audit(_extender(p, lado_y, z0), space) for p in bridge), "P'")
    logger.info("Pegado disjunto: %d + %d aplicaciones", len(F), len(P))
    return _certificar_pegado(space, F, P, lam, n_max, budget, config)


def _punto_de_contacto(Y: PointCloud, Z: PointCloud) -> np.ndarray:
    tol = Y.resolution + Z.resolution + GEOM_EPS
    comunes = _puntos_comunes(Y, Z, tol)
    if len(comunes) == 0:
        raise GlueError("intersection is empty: use glue_disjoint")
    if diameter_of(comunes) > 2.0 * tol + GEOM_EPS:
        raise GlueError("intersection is larger than a singleton")
    return comunes[0]


def glue_wedge(Ysys: FractalSystem, Z: PointCloud, bridge: MapFamily, x0,
               lam: float = DEFAULTS.lam, n_max: int = DEFAULTS.n_max,
               budget: int = DEFAULTS.budget,
               config: Configuracion = DEFAULTS) -> FractalSystem:
    """Pegado cuando Y ∩ Z = {x0}: f' vale f(x0) sobre Z y p' vale p(x0)."""
    Y = Ysys.space
    _punto_de_contacto(Y, Z)
    x0 = np.asarray(x0, dtype=float).ravel()
    _comprobar_cobertura(bridge, Y, Z)
    lado_y = NearestSet(Y.points, Z.points)
    space = PointCloud(unique_points(cloud_union([Y, Z]).points),
                       max(Y.resolution, Z.resolution))
    F = MapFamily(tuple(audit(_extender(f, lado_y, f(x0)[0]), space) for f in Ysys.maps), "F'")
    P = MapFamily(tuple(audit(_extender(p, lado_y, p(x0)[0]), space) for p in bridge), "P'")
    logger.info("Pegado por un punto en %s", x0)
    return _certificar_pegado(space, F, P, lam, n_max, budget, config)


def glue_symmetric(Ysys: FractalSystem, Zsys: FractalSystem, y0=None, z0=None,
                   lam: float = DEFAULTS.lam, n_max: int = DEFAULTS.n_max,
                   budget: int = DEFAULTS.budget,
                   config: Configuracion = DEFAULTS) -> FractalSystem:
    """
    Unión de dos fractales topológicos disjuntos o con un punto común. Las
    aplicaciones de Y se extienden constantes sobre Z y las de Z constantes
    sobre Y; ambas familias deben ser contractivas y f(im p) un punto.
    """
    Y, Z = Ysys.space, Zsys.space
    tol = Y.resolution + Z.resolution + GEOM_EPS
    comunes = _puntos_comunes(Y, Z, tol)
    if len(comunes) and diameter_of(comunes) > 2.0 * tol + GEOM_EPS:
        raise GlueError("intersection is larger than a singleton")
    lado_y = NearestSet(Y.points, Z.points)
    lado_z = NearestSet(Z.points, Y.points)
    if len(comunes):
        x0 = comunes[0]
        valores_f = [f(x0)[0] for f in Ysys.maps]
        valores_p = [p(x0)[0] for p in Zsys.maps]
    else:
        y0 = Y.points[0] if y0 is None else np.asarray(y0, dtype=float)
        z0 = Z.points[0] if z0 is None else np.asarray(z0, dtype=float)
        valores_f = [y0] * len(Ysys.maps)
        valores_p = [z0] * len(Zsys.maps)
    space = PointCloud(unique_points(cloud_union([Y, Z]).points),
                       max(Y.resolution, Z.resolution))
    F = MapFamily(tuple(audit(_extender(f, lado_y, v), space)
                        for f, v in zip(Ysys.maps, valores_f)), "F'")
    P = MapFamily(tuple(audit(_extender(p, lado_z, v), space)
                        for p, v in zip(Zsys.maps, valores_p)), "P'")
    for familia in (F, P):
        cert = enumerative_certify(familia, space, lam, n_max, budget)
        if not cert.certified:
            raise ContractionMissingError(f"family {familia.label} not certified on the union")
    tol_s = tol_singleton(space.resolution, config)
    for j, p in enumerate(P):
        im_p = unique_points(p(space.points))
        for i, d in enumerate(_diametros_sobre(F.maps, im_p)):
            if d > tol_s:
                raise SingletonCheckError(i, len(F) + j, d)
    sistema = verify_fractal(FractalSystem(space, F, P), lam, n_max, budget)
    if not sistema.certificate.certified:
        raise FractalError(f"glued system not certified at lambda={lam}")
    logger.info("Pegado simétrico certificado con %d aplicaciones", len(sistema.maps))
    return sistema


def glue_many(systems: Sequence[FractalSystem], lam: float = DEFAULTS.lam,
              n_max: int = DEFAULTS.n_max, budget: int = DEFAULTS.budget,
              config: Configuracion = DEFAULTS) -> FractalSystem:
    """Pliegue por la izquierda de glue_symmetric en el orden de entrada."""
    if not systems:
        raise ValueError("lista de sistemas vacía")
    for i in range(len(systems)):
        for j in range(i + 1, len(systems)):
            a, b = systems[i].space, systems[j].space
            tol = a.resolution + b.resolution + GEOM_EPS
            comunes = _puntos_comunes(a, b, tol)
            if len(comunes) and diameter_of(comunes) > 2.0 * tol + GEOM_EPS:
                raise GlueError(f"spaces {i} and {j} meet in more than one point")
    total = systems[0]
    for s in systems[1:]:
        total = glue_symmetric(total, s, lam=lam, n_max=n_max, budget=budget, config=config)
    return total


# ---------------------------------------------------------------------------
# Continuos sobre rejilla
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridContinuum:
    """
    Unión conexa de celdas cerradas de una rejilla de lado `scale`. Cada
    celda es (esquina, ejes): cuadrados (ejes (0, 1)), segmentos de la recta
    o aristas de la rejilla del plano (un único eje).
    """
    cells: tuple
    scale: float
    dim: int = 2
    check_connected: bool = True

    def __post_init__(self):
        celdas = tuple(sorted({(tuple(int(v) for v in c), tuple(int(a) for a in ax))
                               for c, ax in self.cells}))
        if not celdas:
            raise DecompositionError("empty grid continuum")
        object.__setattr__(self, "cells", celdas)
        if self.check_connected and len(self.components()) != 1:
            raise DecompositionError("grid continuum is not connected")

    # -- construcción -------------------------------------------------------

    @classmethod
    def squares(cls, indices, scale: float) -> "GridContinuum":
        return cls(tuple(((i, j), (0, 1)) for i, j in indices), scale, 2)

    @classmethod
    def segments(cls, indices, scale: float) -> "GridContinuum":
        return cls(tuple(((i,), (0,)) for i in indices), scale, 1)

    @classmethod
    def edges(cls, aristas, scale: float) -> "GridContinuum":
        return cls(tuple(((i, j), (a,)) for i, j, a in aristas), scale, 2)

    @classmethod
    def wireframe(cls, n: int, m: int, scale: float) -> "GridContinuum":
        """Aristas de una rejilla de n x m cuadrados."""
        aristas = [(i, j, 0) for i in range(n) for j in range(m + 1)]
        aristas += [(i, j, 1) for i in range(n + 1) for j in range(m)]
        return cls.edges(aristas, scale)

    @classmethod
    def from_json(cls, data: dict) -> "GridContinuum":
        from .aplicaciones import parse_number
        try:
            scale = parse_number(data["scale"])
            if "wireframe" in data:
                n, m = data["wireframe"]
                return cls.wireframe(int(n), int(m), scale)
            celdas = []
            for c in data.get("cells", []):
                if len(c) == 1:
                    celdas.append(((c[0],), (0,)))
                else:
                    celdas.append(((c[0], c[1]), (0, 1)))
            for i, j, a in data.get("edges", []):
                celdas.append(((i, j), (a,)))
            dim = 1 if celdas and len(celdas[0][0]) == 1 else 2
            return cls(tuple(celdas), scale, dim)
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecFormatError(f"grid continuum mal formado: {exc}") from exc

    def to_json(self) -> dict:
        cuadrados = [list(c) for c, ax in self.cells if len(ax) == self.dim]
        aristas = [list(c) + [ax[0]] for c, ax in self.cells if len(ax) < self.dim]
        datos = {"scale": self.scale, "cells": cuadrados}
        if aristas:
            datos["edges"] = aristas
        return datos

    # -- geometría ----------------------------------------------------------

    def _vertices(self, celda) -> np.ndarray:
        esquina, ejes = celda
        base = np.array(esquina, dtype=int)
        out = []
        for bits in product((0, 1), repeat=len(ejes)):
            v = base.copy()
            for a, b in zip(ejes, bits):
                v[a] += b
            out.append(v)
        return np.array(out)

    def vertex_keys(self, celda) -> set:
        return {tuple(v) for v in self._vertices(celda)}

    def adjacency(self) -> dict:
        """Celdas vecinas: comparten al menos un vértice de la rejilla."""
        por_vertice: dict = {}
        for k, celda in enumerate(self.cells):
            for v in self.vertex_keys(celda):
                por_vertice.setdefault(v, []).append(k)
        vecinos = {k: set() for k in range(len(self.cells))}
        for ks in por_vertice.values():
            for a in ks:
                vecinos[a].update(b for b in ks if b != a)
        return vecinos

    def components(self) -> list:
        """Índices de las celdas de cada componente, ordenadas por su menor celda."""
        n = len(self.cells)
        aristas = np.array([(a, b) for a, bs in self.adjacency().items() for b in bs],
                           dtype=int).reshape(-1, 2)
        adj = scipy.sparse.coo_matrix((np.ones(len(aristas)), (aristas[:, 0], aristas[:, 1])),
                                      shape=(n, n)).tocsr()
        _, etiquetas = scipy.sparse.csgraph.connected_components(adj, directed=False)
        _, primeras = np.unique(etiquetas, return_index=True)
        return [np.flatnonzero(etiquetas == c).tolist() for c in etiquetas[np.sort(primeras)]]

    def cell_diameter(self) -> float:
        return self.scale * math.sqrt(max(len(ax) for _, ax in self.cells))

    def diameter(self) -> float:
        vertices = np.vstack([self._vertices(c) for c in self.cells]).astype(float)
        return diameter_of(unique_points(vertices)) * self.scale

    def center(self, celda) -> np.ndarray:
        return self._vertices(celda).mean(axis=0) * self.scale

    def subcontinuum(self, indices) -> "GridContinuum":
        return GridContinuum(tuple(self.cells[k] for k in indices), self.scale, self.dim)

    def refine(self, m: int) -> "GridContinuum":
        """Cada celda se parte en m^k celdas de lado scale/m."""
        nuevas = []
        for esquina, ejes in self.cells:
            base = np.array(esquina) * m
            for desp in product(range(m), repeat=len(ejes)):
                c = base.copy()
                for a, d in zip(ejes, desp):
                    c[a] += d
                nuevas.append((tuple(int(v) for v in c), ejes))
        return GridContinuum(tuple(nuevas), self.scale / m, self.dim, check_connected=False)

    def cloud(self, step: float) -> PointCloud:
        """Red de la unión de celdas con paso <= step."""
        n = max(1, int(math.ceil(self.scale / step - GEOM_EPS)))
        paso = self.scale / n
        bloques = []
        for celda in self.cells:
            esquina, ejes = celda
            base = np.array(esquina, dtype=float) * self.scale
            for desp in product(range(n + 1), repeat=len(ejes)):
                p = base.copy()
                for a, d in zip(ejes, desp):
                    p[a] += d * paso
                bloques.append(p)
        pts = unique_points(np.array(bloques))
        k = max(len(ax) for _, ax in self.cells)
        return PointCloud(pts, 0.5 * paso * math.sqrt(k))

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float)) / self.scale
        esquinas = np.array([c for c, _ in self.cells], dtype=float)
        libres = np.zeros_like(esquinas, dtype=bool)
        for k, (_, ejes) in enumerate(self.cells):
            libres[k, list(ejes)] = True
        tol = GEOM_EPS / self.scale + 1e-9
        dentro = np.zeros(len(pts), dtype=bool)
        for i in range(0, len(pts), 2048):
            q = pts[i:i + 2048, None, :] - esquinas[None, :, :]
            en_eje = (q >= -tol) & (q <= 1.0 + tol)
            fijo = np.abs(q) <= tol
            ok = np.where(libres[None, :, :], en_eje, fijo).all(axis=2)
            dentro[i:i + 2048] = ok.any(axis=1)
        return dentro

    def as_region(self) -> Region:
        cajas = []
        for esquina, ejes in self.cells:
            lo = np.array(esquina, dtype=float) * self.scale
            hi = lo.copy()
            for a in ejes:
                hi[a] += self.scale
            cajas.append(AxisBox(lo, hi, closed=True))
        return cajas[0] if len(cajas) == 1 else Union(tuple(cajas))


def peano_decompose(X: GridContinuum, eps: float) -> list:
    """
    Partición de las celdas en grupos conexos de diámetro < eps, por
    crecimiento en anchura desde la menor celda no visitada.
    """
    if not eps > X.cell_diameter():
        raise DecompositionError(
            f"eps={eps} too small for cells of diameter {X.cell_diameter():.4g}")
    vecinos = X.adjacency()
    libres = set(range(len(X.cells)))
    grupos = []
    for inicio in range(len(X.cells)):
        if inicio not in libres:
            continue
        libres.discard(inicio)
        grupo = [inicio]
        vertices = X._vertices(X.cells[inicio]).astype(float) * X.scale
        cola = deque([inicio])
        while cola:
            a = cola.popleft()
            for b in sorted(vecinos[a]):
                if b not in libres:
                    continue
                nuevos = X._vertices(X.cells[b]).astype(float) * X.scale
                dif = nuevos[:, None, :] - vertices[None, :, :]
                d = max(float(np.sqrt((dif ** 2).sum(axis=2)).max()), diameter_of(nuevos))
                if max(d, diameter_of(vertices)) < eps:
                    libres.discard(b)
                    grupo.append(b)
                    vertices = np.vstack([vertices, nuevos])
                    cola.append(b)
        grupos.append(X.subcontinuum(sorted(grupo)))
    logger.debug("Descomposición en %d trozos de diámetro < %g", len(grupos), eps)
    return grupos


class Carving(NamedTuple):
    u: Region
    pieces: list
    x0: np.ndarray
    epsilon: float
    core: GridContinuum
    inside_a: bool = True


def _bola_interior(X: GridContinuum, A: Region, muestra: PointCloud):
    arbol = cKDTree(muestra.points)
    dentro_a = A.contains(muestra.points)
    for celda in X.cells:
        c = X.center(celda)
        r = X.scale / 2.0
        for _ in range(5):
            idx = arbol.query_ball_point(c, r)
            cerca = [i for i in idx if np.linalg.norm(muestra.points[i] - c) < r - GEOM_EPS]
            if len(cerca) > 1 and dentro_a[cerca].all():
                return c, r
            r /= 2.0
    raise EmptyInteriorError()


def carve_open_set(X: GridContinuum, A: Region, step: float | None = None) -> Carving:
    """
    Abierto U ⊆ A y trozos pequeños que cubren X menos U.

    Args:
        X: Continuo de rejilla.
        A: Región con interior no vacío relativo a X.
        step: Paso de la red de X usada para buscar la bola interior.

    Returns:
        Carving con U, los trozos P_j (j != i0), el centro x0, el radio
        epsilon y el trozo P_i0.
    """
    paso = X.scale / 8.0 if step is None else step
    muestra = X.cloud(paso)
    x0, eps = _bola_interior(X, A, muestra)
    m = max(2, int(math.floor(X.cell_diameter() / eps)) + 1)
    fina = X.refine(m)
    trozos = peano_decompose(fina, eps)
    claves = [set().union(*(fina.vertex_keys(c) for c in t.cells)) for t in trozos]
    # Un trozo contenido en la unión de los demás sobra; solo pueden
    # cubrirlo los trozos con los que comparte algún vértice
    vivos = list(range(len(trozos)))
    for k in range(len(trozos)):
        if len(vivos) == 1:
            break
        cerca = [j for j in vivos if j != k and claves[j] & claves[k]]
        if not cerca:
            continue
        resto = Union(tuple(trozos[j].as_region() for j in cerca))
        if resto.contains(trozos[k].cloud(fina.scale / 2.0).points).all():
            vivos.remove(k)
    podados = [trozos[k] for k in vivos]
    claves = [claves[k] for k in vivos]
    i0 = next(i for i, t in enumerate(podados) if t.contains(x0).any())
    nucleo = podados[i0]
    vecinos = [t for i, t in enumerate(podados) if i != i0 and claves[i] & claves[i0]]
    if vecinos:
        u = Intersection((nucleo.as_region(),
                          Complement(Union(tuple(t.as_region() for t in vecinos)))))
    else:
        u = nucleo.as_region()
    resto = [t for i, t in enumerate(podados) if i != i0]
    pts = nucleo.cloud(paso).points
    pts_u = pts[u.contains(pts)]
    if len(pts_u) == 0:
        raise DecompositionError("carved U is empty")
    if not A.contains(pts_u).all():
        raise DecompositionError("carved U is not contained in A")
    logger.info("Abierto U alrededor de %s (eps=%g): %d trozos en el complemento",
                x0, eps, len(resto))
    return Carving(u, resto, x0, eps, nucleo, True)


# ---------------------------------------------------------------------------
# Extensión a continuos de Peano
# ---------------------------------------------------------------------------

def _recorrido(trozo: GridContinuum, paso: float) -> np.ndarray:
    """
    Recorrido en profundidad por los puntos de muestra de un trozo; vuelve
    por el mismo camino al retroceder, así que pasa por todos los puntos.
    """
    pts = trozo.cloud(paso).points
    orden = np.lexsort(pts.T[::-1])
    pts = pts[orden]
    if len(pts) == 1:
        return pts
    radio = paso * (1.0 + 1e-6)
    parejas = cKDTree(pts).query_pairs(radio, output_type="ndarray")
    medios = 0.5 * (pts[parejas[:, 0]] + pts[parejas[:, 1]])
    validas = parejas[trozo.contains(medios)]
    vecinos = {k: [] for k in range(len(pts))}
    for a, b in validas:
        vecinos[int(a)].append(int(b))
        vecinos[int(b)].append(int(a))
    visto = {0}
    camino = [0]
    pila = [(0, iter(sorted(vecinos[0])))]
    while pila:
        nodo, it = pila[-1]
        siguiente = next((b for b in it if b not in visto), None)
        if siguiente is None:
            pila.pop()
            if pila:
                camino.append(pila[-1][0])
            continue
        visto.add(siguiente)
        camino.append(siguiente)
        pila.append((siguiente, iter(sorted(vecinos[siguiente]))))
    if len(visto) != len(pts):
        raise DecompositionError("piece sample graph is not connected")
    return pts[camino]


def extend_to_continuum(X: GridContinuum, A: FractalSystem, U: Region, pieces: Sequence,
                        lam: float = DEFAULTS.lam, cloud: PointCloud | None = None,
                        step: float | None = None, n_max: int = DEFAULTS.n_max,
                        budget: int = DEFAULTS.budget,
                        config: Configuracion = DEFAULTS) -> FractalSystem:
    """
    Extiende un fractal topológico sobre A ⊆ X, con aplicaciones constantes
    fuera de U, a todo el continuo X añadiendo P = {e_i∘phi∘f0}.

    Args:
        X: Continuo de rejilla.
        A: Sistema certificado sobre A.
        U: Abierto de X contenido en A.
        pieces: Trozos con X∖A ⊆ unión ⊆ X∖U.
        lam: Malla de certificación.
        cloud: Red de X; por defecto X.cloud(step) unida a la red de A.
        step: Paso de muestreo de X y de los recorridos e_i.

    Returns:
        Sistema certificado sobre X.
    """
    paso = X.scale / 12.0 if step is None else step
    red_x = X.cloud(paso) if cloud is None else cloud
    ambiente = PointCloud(unique_points(cloud_union([red_x, A.space]).points),
                          max(red_x.resolution, A.space.resolution))
    tol = tol_singleton(ambiente.resolution, config)

    # Hipótesis: las aplicaciones de A son constantes en A∖U
    fuera_a = ~U.contains(A.space.points)
    for i, f in enumerate(A.maps):
        if fuera_a.any():
            d = diameter_of(f(A.space.points[fuera_a]))
            if d > tol:
                raise ExtensionHypothesisError(d)

    diam_imagen = [diameter_of(f(ambiente.points)) for f in A.maps]
    if max(diam_imagen, default=0.0) <= tol:
        if diameter(ambiente) > tol:
            raise FractalError("all maps collapse but X is not a singleton")
        x = ambiente.points[:1]
        return verify_fractal(FractalSystem(PointCloud(x), MapFamily((Identity(x.shape[1]),), "F")), lam)

    # Sándwich X∖A ⊆ ⋃P_i ⊆ X∖U
    union_trozos = Union(tuple(t.as_region() for t in pieces)) if pieces else None
    d_a, _ = cKDTree(A.space.points).query(ambiente.points)
    fuera_de_a = d_a > A.space.resolution + ambiente.resolution + GEOM_EPS
    if fuera_de_a.any() and (union_trozos is None
                             or not union_trozos.contains(ambiente.points[fuera_de_a]).all()):
        raise SandwichError("pieces do not cover X minus A")
    for t in pieces:
        if U.contains(t.cloud(paso).points).any():
            raise SandwichError("a piece meets U")

    F = MapFamily(tuple(make_constant_outside(f, U, ambiente, A.space, config)
                        for f in A.maps), "F")
    k0 = int(np.argmax([diameter_of(f(ambiente.points)) for f in F]))
    f0 = F[k0]
    imagen = f0(ambiente.points)
    base = imagen[np.lexsort(imagen.T[::-1])[0]]
    escala = float(np.linalg.norm(imagen - base, axis=1).max())
    phi = DistanceFunctional(base, escala)
    colapsantes = []
    for t in pieces:
        e = Polyline(_recorrido(t, paso))
        colapsantes.append(Compose((e, phi, f0)))
    P = MapFamily(tuple(colapsantes), "P")
    logger.info("Extensión a X: %d aplicaciones de A, %d trozos, f0 = %d", len(F), len(P), k0)

    bang = check_condition_bang(F, P, ambiente, lam, n_max=n_max, budget=budget, config=config,
                                singleton_letters=collapsing_letters(F.maps, ambiente, config))
    sistema = FractalSystem(ambiente, F, P, extension=bang)
    # Además de P, las aplicaciones colapsantes de A también son letras puntuales
    unicos = collapsing_letters(sistema.maps, ambiente, config)
    logger.debug("Letras con imagen puntual tras cualquier prefijo: %s", unicos)
    sistema = verify_fractal(sistema, lam, n_max, budget, singleton_letters=unicos)
    if not sistema.certificate.certified:
        raise FractalError(f"extended system not certified at lambda={lam}")
    return sistema


@dataclass(frozen=True, eq=False)
class Subspace:
    """
    Subespacio A ⊆ X dado por un espacio registrado y una carta isométrica:
    `embedding` lleva las coordenadas del espacio a X y `chart` las devuelve.
    """
    name: str
    region: Region
    embedding: Affine
    chart: Affine


def build_from_self_regenerating(X: GridContinuum, A: Subspace,
                                 lam: float = DEFAULTS.lam, step: float | None = None,
                                 n_max: int = DEFAULTS.n_max, budget: int = DEFAULTS.budget,
                                 config: Configuracion = DEFAULTS,
                                 provenance=None) -> FractalSystem:
    """
    Cadena completa: abierto U ⊆ A, ladrillo de A constante fuera de U y
    extensión a todo X.

    Args:
        X: Continuo de rejilla.
        A: Subespacio autorregenerante con interior no vacío en X.
        lam: Malla de certificación.
        step: Paso de muestreo de X.
        provenance: Registro de procedencia opcional (una línea por etapa).

    Returns:
        Sistema certificado sobre X.
    """
    from .ladrillos import assemble_brick_fractal, build_brick

    corte = carve_open_set(X, A.region, step)
    u_local = Pullback(corte.u, A.embedding)
    ladrillo = build_brick(A.name, u_local, config=config)
    local = assemble_brick_fractal(ladrillo, lam=lam, n_max=n_max, budget=budget, config=config)

    def conjugar(m: SelfMap) -> SelfMap:
        return Compose((A.embedding, m, A.chart))

    sistema_a = FractalSystem(image_cloud(A.embedding, local.space),
                              MapFamily(tuple(conjugar(m) for m in local.contracting), "F"),
                              MapFamily(tuple(conjugar(m) for m in local.collapsing), "P"))
    if provenance is not None:
        provenance.stage("carve_open_set", x0=corte.x0.tolist(), epsilon=corte.epsilon,
                         pieces=len(corte.pieces), u=corte.u.to_json(),
                         u_inside_a=corte.inside_a)
        provenance.stage("brick", space=A.name, address=ladrillo.address,
                         phi=ladrillo.contract.to_json(),
                         certificate=local.certificate.to_json())
    sistema = extend_to_continuum(X, sistema_a, corte.u, corte.pieces, lam, step=step,
                                  n_max=n_max, budget=budget, config=config)
    if provenance is not None:
        ext = sistema.extension
        provenance.stage("extend_to_continuum",
                         extension=ext.to_json() if ext is not None else None,
                         certificate=sistema.certificate.to_json())
    return sistema
