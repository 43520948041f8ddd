"""
Atractores de IFS (iteración del operador de Hutchinson) y certificación de
sistemas topológicamente contractivos: método analítico con la constante de
Lipschitz y método enumerativo sobre palabras de composición.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .aplicaciones import MapFamily, empirical_lipschitz, family_image_clouds
from .configuracion import DEFAULTS
from .errores import (
    AnalyticInapplicableError, BudgetExceeded, ConvergenceError, MeshError,
    NotAFractalError, NotAnIFSError, SandwichError,
)
from .geometria import (
    PointCloud, cloud_union, diameter, diameter_of, directed_distance,
    epsilon_net, farthest_point, hausdorff_distance, unique_points,
)

logger = logging.getLogger(__name__)

CERTIFICADO = "certified"
REFUTADO = "refuted_up_to_depth"


@dataclass(frozen=True)
class ContractionCertificate:
    """
    Evidencia de contracción topológica a malla lam: toda composición de
    longitud depth_n tiene imagen de diámetro < lam - error_budget.
    """
    lam: float
    depth_n: int
    max_observed_diameter: float
    error_budget: float
    method: str
    family_size: int
    verdict: str
    n_max: int = 0
    witness: tuple = ()
    words_visited: int = 0
    empirical: bool = False

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFICADO

    def to_json(self) -> dict:
        datos = {
            "lambda": self.lam,
            "depth_n": self.depth_n,
            "max_observed_diameter": self.max_observed_diameter,
            "error_budget": self.error_budget,
            "method": self.method,
            "family_size": self.family_size,
            "verdict": self.verdict if self.certified else f"{REFUTADO}({self.n_max})",
            "n_max": self.n_max,
            "witness": list(self.witness),
            "words_visited": self.words_visited,
            "empirical": self.empirical,
        }
        return datos

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True, eq=False)
class FractalSystem:
    """Espacio X con su familia contractiva F y la familia colapsante P."""
    space: PointCloud
    contracting: MapFamily
    collapsing: MapFamily = field(default_factory=lambda: MapFamily((), "P"))
    certificate: ContractionCertificate | None = None
    # Constantes de la extensión (ExtensionCertificate) cuando el sistema se construye por pegado
    extension: object = None

    @property
    def maps(self) -> tuple:
        return self.contracting.maps + self.collapsing.maps

    @property
    def family(self) -> MapFamily:
        return MapFamily(self.maps, "F∪P")

    def images(self) -> PointCloud:
        return cloud_union(family_image_clouds(self.maps, self.space))

    def to_json(self) -> dict:
        return {
            "space": {"dim": self.space.dim, "points": len(self.space),
                      "resolution": self.space.resolution},
            "contracting": self.contracting.to_json(),
            "collapsing": self.collapsing.to_json(),
            "certificate": self.certificate.to_json() if self.certificate else None,
            "extension": self.extension.to_json() if self.extension is not None else None,
        }


# ---------------------------------------------------------------------------
# Atractores
# ---------------------------------------------------------------------------

def hutchinson(F: MapFamily, c: PointCloud, eps: float | None = None) -> PointCloud:
    """
    Operador de Hutchinson F(Y) = unión de f(Y).

    Args:
        F: Familia de aplicaciones.
        c: Red de Y.
        eps: Si se da, la unión se reduce a una eps-red.

    Returns:
        Red de F(Y).
    """
    union = cloud_union(family_image_clouds(F.maps, c))
    if eps is None:
        return PointCloud(unique_points(union.points), union.resolution)
    return epsilon_net(union, eps)


def iterate_hutchinson(F: MapFamily, seed: PointCloud,
                       eps: float | None = None) -> Iterator[tuple[PointCloud, float]]:
    """Genera (A_k, d_H(A_{k-1}, A_k)) indefinidamente."""
    actual = seed
    while True:
        siguiente = hutchinson(F, actual, eps)
        d = hausdorff_distance(actual, siguiente, accelerate=True)
        yield siguiente, d
        actual = siguiente


def attractor(F: MapFamily, seed: PointCloud, tol: float,
              max_iter: int = DEFAULTS.max_iter, eps: float | None = None) -> PointCloud:
    """
    Aproximación del atractor de un IFS por iteración desde `seed`.

    Para en A_k en cuanto d_k = d_H(A_{k-1}, A_k) <= tol*(1-alpha) o en
    cuanto la cota d_H(A_k, F(A_k)) <= alpha*d_k + eps ya es <= tol*(1-alpha).
    La segunda condición hace que una familia de constantes (alpha = 0)
    termine en la primera iteración.

    Args:
        F: IFS (todas las cotas de Lipschitz < 1).
        seed: Red inicial.
        tol: Tolerancia final, d_H(A, F(A)) <= tol.
        max_iter: Número máximo de iteraciones.
        eps: Radio de la red de trabajo; por defecto tol*(1-alpha)/4.

    Returns:
        Red del atractor.
    """
    alpha = F.alpha
    if not alpha < 1.0:
        raise NotAnIFSError(alpha)
    if eps is None:
        eps = tol * (1.0 - alpha) / 4.0
    ultima = math.inf
    for k, (nube, d) in enumerate(iterate_hutchinson(F, seed, eps), start=1):
        logger.debug("Iteración %d: distancia %.3e, %d puntos", k, d, len(nube))
        ultima = d
        limite = tol * (1.0 - alpha)
        if d <= limite or alpha * d + eps <= limite:
            logger.info("Atractor tras %d iteraciones (%d puntos)", k, len(nube))
            return PointCloud(nube.points, max(nube.resolution, tol))
        if k >= max_iter:
            break
    raise ConvergenceError(max_iter, ultima)


def address_net(F: MapFamily, seed: PointCloud, depth: int,
                seed_resolution: float | None = None) -> PointCloud:
    """
    Todas las imágenes f_w(seed) con |w| = depth, sin repeticiones.

    Si `seed` es una red de un compacto que contiene al atractor, el
    resultado es una red del atractor de resolución alpha**depth por la de
    la semilla.
    """
    pts = seed.points
    for _ in range(depth):
        pts = unique_points(np.vstack([f(pts) for f in F]))
    h = seed.resolution if seed_resolution is None else seed_resolution
    return PointCloud(pts, F.alpha ** depth * h)


# ---------------------------------------------------------------------------
# Certificación
# ---------------------------------------------------------------------------

def analytic_depth(F: MapFamily, diam: float, lam: float) -> int:
    """Menor n >= 1 con alpha**n * diam < lam."""
    alpha = F.alpha
    if not alpha < 1.0:
        raise AnalyticInapplicableError(alpha)
    if lam <= 0:
        raise ValueError("lambda debe ser positivo")
    n = 1
    while alpha ** n * diam >= lam:
        n += 1
    return n


def analytic_certify(F: MapFamily, X: PointCloud, lam: float) -> ContractionCertificate:
    d = diameter(X) + 2.0 * X.resolution
    n = analytic_depth(F, d, lam)
    return ContractionCertificate(
        lam=lam, depth_n=n, max_observed_diameter=F.alpha ** n * d, error_budget=0.0,
        method="analytic", family_size=len(F), verdict=CERTIFICADO, n_max=n)


def _lips(F: MapFamily, X: PointCloud) -> tuple[list[float], bool]:
    lips = [m.lip for m in F]
    if all(math.isfinite(v) for v in lips):
        return lips, False
    logger.warning("Cota de Lipschitz infinita: se usa la estimación empírica con margen doble")
    estim = []
    for m in F:
        if math.isfinite(m.lip):
            estim.append(m.lip)
        else:
            estim.append(2.0 * empirical_lipschitz(m, X) if len(X) > 1 else 0.0)
    return estim, True


def enumerative_certify(F: MapFamily, X: PointCloud, lam: float,
                        n_max: int = DEFAULTS.n_max, budget: int = DEFAULTS.budget,
                        singleton_letters: Sequence[int] = ()) -> ContractionCertificate:
    """
    Búsqueda en profundidad sobre las palabras f_{w1}∘...∘f_{wk}. Una rama se
    corta en cuanto diámetro + error < lam, porque añadir letras por dentro
    solo reduce la imagen.

    Args:
        F: Familia a certificar.
        X: Red del espacio.
        lam: Malla del recubrimiento.
        n_max: Profundidad máxima.
        budget: Número máximo de palabras visitadas.
        singleton_letters: Letras cuya imagen ya se sabe que es un punto en
            cuanto se les antepone otra letra.

    Returns:
        Certificado con veredicto certified o refuted_up_to_depth.
    """
    if lam <= 2.0 * X.resolution:
        raise MeshError(lam, X.resolution)
    m = len(F)
    if m == 0:
        raise ValueError("familia vacía")
    lips, empirico = _lips(F, X)
    margen = 2.0 if empirico else 1.0
    h = X.resolution
    singletons = set(singleton_letters)
    # Imagen de X por cada letra, reutilizada como última letra de cada palabra
    por_letra = [n.points for n in family_image_clouds(F.maps, X)]

    visitadas = 0
    profundidad = 1
    testigo = None  # (diam + err, diam, err, palabra)
    pila = [((j,), lips[j]) for j in reversed(range(m))]
    while pila:
        palabra, L = pila.pop()
        visitadas += 1
        if visitadas > budget:
            parcial = ContractionCertificate(
                lam=lam, depth_n=max(profundidad, 1),
                max_observed_diameter=testigo[1] if testigo else math.nan,
                error_budget=testigo[2] if testigo else math.nan,
                method="enumerative", family_size=m, verdict=REFUTADO, n_max=n_max,
                witness=testigo[3] if testigo else (), words_visited=visitadas - 1,
                empirical=empirico)
            raise BudgetExceeded(budget, parcial)
        if len(palabra) > 1 and palabra[-1] in singletons:
            d, err = 0.0, 0.0
        else:
            pts = por_letra[palabra[-1]]
            for letra in reversed(palabra[:-1]):
                pts = F[letra](pts)
            d = diameter_of(pts)
            err = margen * 2.0 * h * L
        if d + err < lam:
            profundidad = max(profundidad, len(palabra))
            if testigo is None or d + err > testigo[0]:
                testigo = (d + err, d, err, palabra)
            continue
        if len(palabra) >= n_max:
            logger.info("Refutado hasta profundidad %d: palabra %s con diámetro %.4g",
                        n_max, palabra, d)
            return ContractionCertificate(
                lam=lam, depth_n=n_max, max_observed_diameter=d, error_budget=err,
                method="enumerative", family_size=m, verdict=REFUTADO, n_max=n_max,
                witness=palabra, words_visited=visitadas, empirical=empirico)
        for j in reversed(range(m)):
            pila.append((palabra + (j,), _producto(L, lips[j])))

    cert = ContractionCertificate(
        lam=lam, depth_n=profundidad, max_observed_diameter=testigo[1],
        error_budget=testigo[2], method="enumerative", family_size=m,
        verdict=CERTIFICADO, n_max=n_max, witness=testigo[3],
        words_visited=visitadas, empirical=empirico)
    logger.info("Certificado a malla %g con profundidad %d (%d palabras)",
                lam, profundidad, visitadas)
    return cert


def _producto(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


def certify_on_subdomain(F: MapFamily, X: PointCloud, Y: PointCloud, lam: float,
                         n_max: int = DEFAULTS.n_max, budget: int = DEFAULTS.budget
                         ) -> tuple[ContractionCertificate, ContractionCertificate]:
    """
    Certifica F sobre X y sobre un Y con F(X) ⊆ Y ⊆ X. Los dos veredictos
    deben coincidir; si no, la red es demasiado gruesa.
    """
    imagen = hutchinson(F, X)
    holgura = 1e-9
    d_img = directed_distance(imagen, Y, accelerate=True)
    if d_img > Y.resolution + imagen.resolution + holgura:
        raise SandwichError(f"F(X) is not contained in Y (distance {d_img:.3e})")
    d_sub = directed_distance(Y, X, accelerate=True)
    if d_sub > X.resolution + holgura:
        raise SandwichError(f"Y is not contained in X (distance {d_sub:.3e})")
    cert_x = enumerative_certify(F, X, lam, n_max, budget)
    cert_y = enumerative_certify(F, Y, lam, n_max, budget)
    if cert_x.verdict != cert_y.verdict:
        logger.warning("Veredictos distintos en X (%s) y en Y (%s): fallo de resolución numérica",
                       cert_x.verdict, cert_y.verdict)
    return cert_x, cert_y


def verify_fractal(system: FractalSystem, lam: float, n_max: int = DEFAULTS.n_max,
                   budget: int = DEFAULTS.budget, tol: float = 1e-9,
                   singleton_letters: Sequence[int] = ()) -> FractalSystem:
    """
    Comprueba X = unión de f(X) y añade un certificado enumerativo de F ∪ P.

    Args:
        system: Sistema a verificar.
        lam: Malla de certificación.
        n_max: Profundidad máxima.
        budget: Presupuesto de palabras.
        tol: Holgura añadida a 2*resolución en la comprobación de cobertura.
        singleton_letters: Índices (en F ∪ P) de letras con imagen puntual.

    Returns:
        El sistema con el certificado adjunto.
    """
    imagenes = system.images()
    d, k = farthest_point(system.space, imagenes)
    limite = max(2.0 * system.space.resolution, imagenes.resolution) + tol
    if d > limite:
        raise NotAFractalError(system.space.points[k], d)
    logger.debug("Cobertura: distancia %.3e <= %.3e", d, limite)
    cert = enumerative_certify(system.family, system.space, lam, n_max, budget,
                               singleton_letters)
    return replace(system, certificate=cert)


def certify_between(F: MapFamily, X: PointCloud, Z: PointCloud, lam: float,
                    n_max: int = DEFAULTS.n_max,
                    budget: int = DEFAULTS.budget) -> ContractionCertificate:
    """Certificado sobre cualquier Z con F(X) ⊆ Z ⊆ X; su veredicto es el de X."""
    _, cert_z = certify_on_subdomain(F, X, Z, lam, n_max, budget)
    return cert_z
