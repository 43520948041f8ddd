"""
Excepciones del paquete. Todas derivan de FractalError para que la CLI pueda
distinguir errores de entrada (código 2) de fallos de certificación (código 1).
"""
from __future__ import annotations


class FractalError(Exception):
    """Error base del paquete."""


class SpecFormatError(FractalError):
    """Fichero de entrada mal formado. `position` indica dónde."""

    def __init__(self, message: str, position: str | None = None):
        if position:
            message = f"{message} (at {position})"
        super().__init__(message)
        self.position = position


class DimensionError(FractalError):
    pass


class MeshError(FractalError):
    def __init__(self, lam: float, resolution: float):
        super().__init__(f"mesh below resolution: lambda={lam} <= 2*{resolution}")
        self.lam = lam
        self.resolution = resolution


class NotAnIFSError(FractalError):
    def __init__(self, alpha: float):
        super().__init__(f"not an IFS: max Lipschitz bound {alpha} >= 1")
        self.alpha = alpha


class AnalyticInapplicableError(FractalError):
    def __init__(self, alpha: float):
        super().__init__(f"analytic method inapplicable: alpha={alpha}")
        self.alpha = alpha


class ConvergenceError(FractalError):
    def __init__(self, iterations: int, last_distance: float):
        super().__init__(
            f"attractor iteration did not converge after {iterations} steps "
            f"(last distance {last_distance:.3e})")
        self.iterations = iterations
        self.last_distance = last_distance


class BudgetExceeded(FractalError):
    """Se superó el presupuesto de palabras. Lleva el certificado parcial."""

    def __init__(self, budget: int, partial):
        super().__init__(f"budget exceeded: more than {budget} words visited")
        self.budget = budget
        self.partial = partial


class ExtensionHypothesisError(FractalError):
    def __init__(self, diameter: float):
        super().__init__(
            f"extension hypothesis violated: image outside u has diameter {diameter:.3e}")
        self.diameter = diameter


class NotAFractalError(FractalError):
    def __init__(self, witness, distance: float):
        punto = ", ".join(f"{v:.6g}" for v in witness)
        super().__init__(f"not a fractal structure: uncovered region at ({punto})")
        self.witness = list(map(float, witness))
        self.distance = distance


class SingletonCheckError(FractalError):
    def __init__(self, f_index: int, p_index: int, diameter: float):
        super().__init__(
            f"singleton check failed: f={f_index}, p={p_index}, diameter={diameter:.3e}")
        self.f_index = f_index
        self.p_index = p_index
        self.diameter = diameter


class ContractionMissingError(FractalError):
    pass


class SandwichError(FractalError):
    pass


class GlueError(FractalError):
    pass


class DecompositionError(FractalError):
    pass


class EmptyInteriorError(FractalError):
    def __init__(self):
        super().__init__("A has empty interior at grid resolution")


class SubcopyError(FractalError):
    def __init__(self, depth: int):
        super().__init__(f"U too thin at resolution (searched up to depth {depth})")
        self.depth = depth


class PhiContractError(FractalError):
    def __init__(self, defect: str, value: float, tolerance: float):
        super().__init__(
            f"phi construction invalid: {defect}={value:.3e} > {tolerance:.3e}")
        self.defect = defect
        self.value = value
        self.tolerance = tolerance
