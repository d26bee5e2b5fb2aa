"""Desk-scale models of torus orbits on the Bruhat-Tits tree, multiplicative
boundary integration, Kolyvagin derivatives and the surrounding arithmetic."""

from .curves import CurveModel, l_value, root_number
from .integrate import PointSystem, integrate_mult, kolyvagin_derivative, mock_invariant
from .iwasawa import IwasawaElem, kappa_from_system, rank_bound
from .padic import PadicElem, QuadExtElem
from .tree import TorusData, TreeEdge, TreeVertex

__all__ = [
    "CurveModel", "IwasawaElem", "PadicElem", "PointSystem", "QuadExtElem", "TorusData",
    "TreeEdge", "TreeVertex", "integrate_mult", "kappa_from_system", "kolyvagin_derivative",
    "l_value", "mock_invariant", "rank_bound", "root_number",
]
