"""quadpeg: inscribe cyclic quadrilaterals in smooth Jordan curves.

The library has four layers:

- :mod:`quadpeg.quadrilateral` names oriented similarity classes of cyclic
  quadrilaterals by a triple (s, t, phi) and evaluates the inscription
  residual that cuts them out of vertex 4-tuples;
- :mod:`quadpeg.curve` represents smooth closed plane curves as truncated
  Fourier series, with validity checks and a text file format;
- :mod:`quadpeg.solver` finds inscriptions of a class in a curve by
  multistart damped Newton iteration on the parameter 4-torus;
- :mod:`quadpeg.maslov` computes Maslov indices (det^2 winding numbers) of
  loops of Lagrangian planes, including the tangent loops of gamma x gamma
  and their images under the diagonal-splitting maps.

The ``quadpeg`` command line tool (see :mod:`quadpeg.cli`) exposes all of
this on files.
"""

from .curve import (
    CurveFormatError,
    CurveSample,
    CurveValidationError,
    CurveValidityReport,
    FourierCurve,
    GenerationError,
    ResolutionError,
    circle,
    circle_distance,
    dumps_curve,
    ellipse,
    generate,
    load_curve,
    loads_curve,
    random_curve,
    save_curve,
    turning_number,
    validate,
)
from .maslov import (
    DegeneratePlaneError,
    FormWeights,
    LagrangianLoop,
    LagrangianPlane,
    LagrangianViolationError,
    image_torus_loop,
    is_lagrangian,
    maslov_index,
    minimum_maslov_number,
    symplectic_product,
    torus_loop,
    unitary_frame,
)
from .quadrilateral import (
    ComplexPair,
    CyclicQuadParams,
    NotConvexError,
    NotCyclicError,
    QuadrilateralError,
    QuadVertices,
    apply_F,
    apply_R,
    inscription_residual,
    is_cyclic,
    is_degenerate,
    params_from_vertices,
    similarity_class_equal,
    vertices_from_params,
)
from .solver import (
    Inscription,
    InscriptionProblem,
    NewtonFailure,
    SolveDiagnostics,
    SolveResult,
    SolverOptions,
    dedupe,
    newton_refine,
    oracle_grid_search,
    solve_all,
)

__version__ = "0.1.0"

__all__ = [
    "ComplexPair",
    "CurveFormatError",
    "CurveSample",
    "CurveValidationError",
    "CurveValidityReport",
    "CyclicQuadParams",
    "DegeneratePlaneError",
    "FormWeights",
    "FourierCurve",
    "GenerationError",
    "Inscription",
    "InscriptionProblem",
    "LagrangianLoop",
    "LagrangianPlane",
    "LagrangianViolationError",
    "NewtonFailure",
    "NotConvexError",
    "NotCyclicError",
    "QuadVertices",
    "QuadrilateralError",
    "ResolutionError",
    "SolveDiagnostics",
    "SolveResult",
    "SolverOptions",
    "apply_F",
    "apply_R",
    "circle",
    "circle_distance",
    "dedupe",
    "dumps_curve",
    "ellipse",
    "generate",
    "image_torus_loop",
    "inscription_residual",
    "is_cyclic",
    "is_degenerate",
    "is_lagrangian",
    "load_curve",
    "loads_curve",
    "maslov_index",
    "minimum_maslov_number",
    "newton_refine",
    "oracle_grid_search",
    "params_from_vertices",
    "random_curve",
    "save_curve",
    "similarity_class_equal",
    "solve_all",
    "symplectic_product",
    "torus_loop",
    "turning_number",
    "unitary_frame",
    "validate",
    "vertices_from_params",
]
