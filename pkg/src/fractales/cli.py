"""
Interfaz de línea de órdenes: atractores, certificados, pegados, ladrillos,
la cadena completa sobre continuos de rejilla y el informe de
autorregeneración.

Códigos de salida: 0 certificado/correcto, 1 refutado o fallo de
certificación (diagnóstico JSON por la salida estándar), 2 error de entrada.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .aplicaciones import Affine, family_from_json, map_from_json, parse_number, parse_vector
from .combinadores import (
    GridContinuum, Subspace, build_from_self_regenerating, glue_disjoint, glue_many,
    glue_wedge,
)
from .configuracion import DEFAULTS, Configuracion
from .contraccion import (
    FractalSystem, analytic_certify, attractor, enumerative_certify,
)
from .errores import BudgetExceeded, FractalError, SpecFormatError
from .geometria import (
    Ball, PointCloud, cloud_union, grid_net, interval_net, region_from_json, unique_points,
)
from .grafica import FORMATOS, save_cloud
from .ladrillos import (
    ESPACIOS, assemble_brick_fractal, build_brick, certify_self_regenerating,
    registry_hull, registry_net,
)
from .registro import Provenance, default_provenance_path

logger = logging.getLogger(__name__)

SALIDA_OK = 0
SALIDA_FALLO = 1
SALIDA_ENTRADA = 2


# ---------------------------------------------------------------------------
# Lectura de ficheros
# ---------------------------------------------------------------------------

def load_json_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def space_from_json(data: dict, config: Configuracion = DEFAULTS) -> PointCloud:
    """
    Red de un espacio descrito en JSON: intervalo, caja, atractor
    registrado, continuo de rejilla, unión de espacios o lista de puntos.
    """
    tipo = data.get("type", "points")
    try:
        if tipo == "interval":
            a, b = parse_number(data["a"]), parse_number(data["b"])
            paso = parse_number(data.get("step", config.resolucion_relativa * (b - a)))
            return interval_net(a, b, paso)
        if tipo == "grid":
            lo, hi = parse_vector(data["lo"]), parse_vector(data["hi"])
            ancho = float(np.max(hi - lo))
            paso = parse_number(data.get("step", config.resolucion_relativa * ancho))
            return grid_net(lo, hi, paso)
        if tipo == "registry":
            return registry_net(data["name"], config, data.get("depth"))
        if tipo == "continuum":
            X = GridContinuum.from_json(data)
            return X.cloud(float(data.get("step", X.scale / 12.0)))
        if tipo == "union":
            partes = [space_from_json(p, config) for p in data["parts"]]
            union = cloud_union(partes)
            return PointCloud(unique_points(union.points), union.resolution)
        if tipo == "points":
            return PointCloud.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecFormatError(f"espacio {tipo!r} mal formado: {exc}", "space") from exc
    raise SpecFormatError(f"tipo de espacio desconocido: {tipo!r}", "space")


def system_from_json(data: dict, config: Configuracion = DEFAULTS) -> FractalSystem:
    """
    Sistema (X, F, P) de un fichero: `maps`, `collapsing` opcional y el
    espacio `space`; sin espacio, X es el atractor de F desde `seed`.
    """
    if "maps" not in data:
        raise SpecFormatError("el sistema necesita una lista 'maps'", "maps")
    F = family_from_json({"maps": data["maps"], "label": data.get("label", "F")})
    P = family_from_json({"maps": data.get("collapsing", []), "label": "P"})
    if "space" in data:
        X = space_from_json(data["space"], config)
    else:
        dim = F[0].dim_in if len(F) else 1
        semilla = (PointCloud.from_json(data["seed"]) if "seed" in data
                   else PointCloud(np.zeros((1, dim))))
        X = attractor(F, semilla, config.tol, config.max_iter)
    return FractalSystem(X, F, P)


def subspace_from_json(data: dict) -> Subspace:
    try:
        incrustacion = map_from_json(data["embedding"])
        carta = map_from_json(data["chart"])
        if not isinstance(incrustacion, Affine) or not isinstance(carta, Affine):
            raise SpecFormatError("embedding y chart deben ser afines", "subspace")
        return Subspace(data["name"], region_from_json(data["region"]), incrustacion, carta)
    except KeyError as exc:
        raise SpecFormatError(f"falta el campo {exc}", "subspace") from exc


# ---------------------------------------------------------------------------
# Órdenes
# ---------------------------------------------------------------------------

def _emitir(datos: dict, args) -> None:
    texto = json.dumps(datos, sort_keys=True, indent=2)
    print(texto)
    if args.out and args.command != "attractor":
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(texto + "\n")


def cmd_attractor(args, config: Configuracion, registro: Provenance) -> int:
    datos = load_json_file(args.fichero)
    sistema = system_from_json({k: v for k, v in datos.items() if k != "space"}, config)
    nube = sistema.space
    registro.stage("attractor", points=len(nube), resolution=nube.resolution, tol=config.tol)
    if args.out:
        save_cloud(nube, args.out, args.format, config.pixeles_por_unidad)
    _emitir({"points": len(nube), "resolution": nube.resolution, "dim": nube.dim}, args)
    return SALIDA_OK


def cmd_certify(args, config: Configuracion, registro: Provenance) -> int:
    sistema = system_from_json(load_json_file(args.fichero), config)
    familia = sistema.family
    if args.method == "analytic":
        cert = analytic_certify(familia, sistema.space, config.lam)
    else:
        cert = enumerative_certify(familia, sistema.space, config.lam, config.n_max,
                                   config.budget)
    registro.stage("certify", certificate=cert.to_json())
    _emitir(cert.to_json(), args)
    return SALIDA_OK if cert.certified else SALIDA_FALLO


def cmd_glue(args, config: Configuracion, registro: Provenance) -> int:
    kw = dict(lam=config.lam, n_max=config.n_max, budget=config.budget, config=config)
    datos = [load_json_file(p) for p in args.ficheros]
    if len(datos) == 1 and "bridge" in datos[0]:
        d = datos[0]
        Y = system_from_json(d["system"], config)
        Z = space_from_json(d["target"], config)
        puente = family_from_json(d["bridge"])
        if "x0" in d:
            sistema = glue_wedge(Y, Z, puente, d["x0"], **kw)
        else:
            sistema = glue_disjoint(Y, Z, puente, d["y0"], d["z0"], **kw)
    else:
        if len(datos) == 1 and "systems" in datos[0]:
            datos = datos[0]["systems"]
        sistema = glue_many([system_from_json(d, config) for d in datos], **kw)
    salida = sistema.to_json()
    registro.stage("glue", extension=salida["extension"], certificate=salida["certificate"])
    _emitir(salida, args)
    return SALIDA_OK


def cmd_brick(args, config: Configuracion, registro: Provenance) -> int:
    u = region_from_json(load_json_file(args.u))
    ladrillo = build_brick(args.space, u, config)
    registro.stage("brick", brick=ladrillo.to_json())
    sistema = assemble_brick_fractal(ladrillo, config.lam, config.n_max, config.budget, config)
    registro.stage("assemble_brick_fractal", certificate=sistema.certificate.to_json())
    _emitir({"brick": ladrillo.to_json(), "system": sistema.to_json()}, args)
    return SALIDA_OK


def cmd_pipeline(args, config: Configuracion, registro: Provenance) -> int:
    datos = load_json_file(args.fichero)
    try:
        X = GridContinuum.from_json(datos["continuum"])
        A = subspace_from_json(datos["subspace"])
    except KeyError as exc:
        raise SpecFormatError(f"falta el campo {exc}", "pipeline") from exc
    lam = config.lam if args.lam is not None else parse_number(datos.get("lambda", config.lam))
    sistema = build_from_self_regenerating(X, A, lam, datos.get("step"),
                                           config.n_max, config.budget, config, registro)
    _emitir(sistema.to_json(), args)
    return SALIDA_OK


def _abiertos_aleatorios(space: str, n: int, config: Configuracion) -> list:
    """Bolas abiertas centradas en puntos de la red, con radios al azar."""
    rng = np.random.RandomState(config.semilla)
    red = registry_net(space, config)
    centros = red.points[rng.randint(0, len(red), n)]
    radios = rng.uniform(0.1, 0.3, n)
    return [Ball(c, float(r)) for c, r in zip(centros, radios)]


def cmd_regen_report(args, config: Configuracion, registro: Provenance) -> int:
    abiertos = []
    if args.u_file:
        datos = load_json_file(args.u_file)
        lista = datos if isinstance(datos, list) else datos.get("regions", [])
        abiertos = [region_from_json(r) for r in lista]
    if args.samples:
        abiertos += _abiertos_aleatorios(args.space, args.samples, config)
    if not abiertos:
        raise SpecFormatError("no hay abiertos: use --u-file o --samples", "regen-report")
    registry_hull(args.space)
    informe = certify_self_regenerating(args.space, abiertos, config.lam, config.n_max,
                                        config.budget, config)
    registro.stage("certify_self_regenerating", certified=informe["certified"],
                   samples=len(abiertos))
    _emitir(informe, args)
    return SALIDA_OK if informe["certified"] == len(abiertos) else SALIDA_FALLO


ORDENES = {
    "attractor": cmd_attractor,
    "certify": cmd_certify,
    "glue": cmd_glue,
    "brick": cmd_brick,
    "pipeline": cmd_pipeline,
    "regen-report": cmd_regen_report,
}


# ---------------------------------------------------------------------------
# Argumentos y ejecución
# ---------------------------------------------------------------------------

def _positivo(tipo):
    def convertir(texto):
        valor = tipo(texto)
        if valor <= 0:
            raise argparse.ArgumentTypeError(f"debe ser positivo: {texto}")
        return valor
    return convertir


def build_parser() -> argparse.ArgumentParser:
    comunes = argparse.ArgumentParser(add_help=False)
    comunes.add_argument("--lambda", dest="lam", type=_positivo(float), default=None,
                         help="malla de certificación")
    comunes.add_argument("--tol", type=_positivo(float), default=DEFAULTS.tol,
                         help="tolerancia del atractor")
    comunes.add_argument("--n-max", type=_positivo(int), default=DEFAULTS.n_max)
    comunes.add_argument("--budget", type=_positivo(int), default=DEFAULTS.budget,
                         help="número máximo de palabras visitadas")
    comunes.add_argument("--resolution", type=_positivo(float),
                         default=DEFAULTS.resolucion_relativa,
                         help="resolución de trabajo relativa al diámetro")
    comunes.add_argument("--seed", type=int, default=DEFAULTS.semilla)
    comunes.add_argument("--out", help="fichero de salida")
    comunes.add_argument("--format", choices=FORMATOS, default="json")
    comunes.add_argument("--provenance", help="registro de procedencia (líneas JSON)")
    comunes.add_argument("--no-timestamp", action="store_true",
                         help="sin fecha en la cabecera del registro")
    comunes.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fractales",
                                     description="Fractales topológicos y su certificación.")
    parser.add_argument("--print-defaults", action="store_true",
                        help="muestra la configuración por defecto y sale")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("attractor", parents=[comunes], help="atractor de un IFS")
    p.add_argument("fichero")
    p = sub.add_parser("certify", parents=[comunes], help="certificado de contracción")
    p.add_argument("fichero")
    p.add_argument("--method", choices=("enumerative", "analytic"), default="enumerative")
    p = sub.add_parser("glue", parents=[comunes], help="pegado de sistemas")
    p.add_argument("ficheros", nargs="+")
    p = sub.add_parser("brick", parents=[comunes], help="ladrillo y su fractal")
    p.add_argument("space", choices=ESPACIOS)
    p.add_argument("--u", required=True, help="región U en JSON")
    p = sub.add_parser("pipeline", parents=[comunes], help="cadena completa sobre un continuo")
    p.add_argument("fichero")
    p = sub.add_parser("regen-report", parents=[comunes], help="informe de autorregeneración")
    p.add_argument("space", choices=ESPACIOS)
    p.add_argument("--u-file")
    p.add_argument("--samples", type=int, default=0)
    return parser


def _diagnostico(exc: Exception) -> dict:
    datos = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, BudgetExceeded):
        datos["partial_certificate"] = exc.partial.to_json()
    for campo in ("witness", "distance", "f_index", "p_index", "diameter", "defect",
                  "value", "tolerance", "position", "last_distance", "iterations"):
        if hasattr(exc, campo):
            datos[campo] = getattr(exc, campo)
    return datos


def run(argv=None) -> int:
    """Ejecuta una orden y devuelve el código de salida."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_defaults:
        print(json.dumps(DEFAULTS.as_dict(), sort_keys=True, indent=2))
        return SALIDA_OK
    if args.command is None:
        parser.print_help()
        return SALIDA_ENTRADA

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    config = DEFAULTS.replace(lam=args.lam or DEFAULTS.lam, tol=args.tol, n_max=args.n_max,
                              budget=args.budget, resolucion_relativa=args.resolution,
                              semilla=args.seed)
    try:
        ruta = args.provenance or default_provenance_path(args.command, args.out,
                                                          not args.no_timestamp)
        with Provenance(ruta, config, timestamp=not args.no_timestamp) as registro:
            registro.stage("command", command=args.command)
            return ORDENES[args.command](args, config, registro)
    except json.JSONDecodeError as exc:
        print(json.dumps({"error": "SpecFormatError", "message": exc.msg,
                          "position": f"line {exc.lineno} column {exc.colno}"}, indent=2))
        return SALIDA_ENTRADA
    except (SpecFormatError, OSError) as exc:
        print(json.dumps(_diagnostico(exc), indent=2, default=str))
        return SALIDA_ENTRADA
    except FractalError as exc:
        print(json.dumps(_diagnostico(exc), indent=2, default=str))
        return SALIDA_FALLO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
