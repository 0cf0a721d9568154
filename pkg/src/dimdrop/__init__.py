"""Dimension drop algebras: sampled elementary maps, homotopy certificates,
and projection pipelines over computable base algebras."""

__version__ = "0.1.0"

from .algebra import (  # noqa: E402
    AlgebraElement,
    BaseAlgebra,
    DimensionDropElement,
    GridPath,
    dd_check,
    iota_embed,
    mu_k,
    star_concat,
)
from .basic import BasicMapSpec, basic_map_eval, diagram_certificate, eta_iota_certificate  # noqa: E402
from .certificates import CertificateBuilder, HomotopyCertificate  # noqa: E402
from .config import RunConfig, Tolerances  # noqa: E402
from .elementary import (  # noqa: E402
    ElementaryMap,
    PathSequence,
    elementary_homotopy,
    gamma_compose,
    gamma_shear,
    standard_path_sequence,
)
from .ktheory import K0Data, K1Class, bezout, connect_in_u0, det_winding, k1_class, rank_fullness  # noqa: E402
from .projections import (  # noqa: E402
    PartialIsometryElement,
    corollary36_complement,
    lemma34_pipeline,
    theorem39_intertwiner,
)

__all__ = [
    "AlgebraElement", "BaseAlgebra", "DimensionDropElement", "GridPath", "dd_check", "iota_embed",
    "mu_k", "star_concat", "BasicMapSpec", "basic_map_eval", "diagram_certificate",
    "eta_iota_certificate", "CertificateBuilder", "HomotopyCertificate", "RunConfig", "Tolerances",
    "ElementaryMap", "PathSequence", "elementary_homotopy", "gamma_compose", "gamma_shear",
    "standard_path_sequence", "K0Data", "K1Class", "bezout", "connect_in_u0", "det_winding",
    "k1_class", "rank_fullness", "PartialIsometryElement", "corollary36_complement",
    "lemma34_pipeline", "theorem39_intertwiner",
]
