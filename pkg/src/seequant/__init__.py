"""Entropy-guided hierarchical vector quantization and related analyses."""
from .errors import DecodeError, InvalidInputError, ParseError, RefusalError, SeeQuantError
from .vq import (ClassDistribution, EntropyObjectiveParams, VectorSet, classify, classify_all,
                 compression_ratio, coverage_radius, distortion, empirical_distribution,
                 entropy_objective, train_codebook)
from .see import (EventGroup, SeeConfig, SeeNode, SeeTree, auto_generative_entropy,
                  greedy_minimize, prune_tree, residual_set, see_estimate, tree_storage_bits)
from .codec import (BlockSpec, CompressionReport, Container, ImageGrid, assemble_blocks, decode,
                    encode, extract_blocks, load_pgm, report, save_pgm)

__version__ = "0.1.0"
