from qgraph.utils.utils import format_float, parallel_map, matrix_from_pairs, matrix_to_pairs

__all__ = ["format_float", "parallel_map", "matrix_from_pairs", "matrix_to_pairs"]
