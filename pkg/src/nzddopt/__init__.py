"""Constraint compression with NZDDs and soft-margin solvers over compressed samples."""
from .build import build_zdd, compress, reduce
from .core import Nzdd, NzddStats, SubsetFamily, depth, edge_multiplicities, language, make_layered, validate
from .data import Sample, gen_mip, gen_rofk, parse_libsvm
from .extform import ExtendedSystem, extend_binary, extend_integer, feasible_extended, matrix_to_family
from .lp import solve_lp, solve_original_softmargin
from .lpfile import emit_lp, read_lp
from .softmargin import SampleNzdd, build_primal, build_sample_nzdd, column_generation, edge_score
from .system import ConstraintSystem, Row, Variable

__version__ = "0.1.0"
